#include "clutter/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "clutter/errors.hpp"

namespace clutter {

ProbabilityVector softmax(const ProbabilityVector& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  ProbabilityVector p{};
  double total = 0.0;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    p[k] = std::exp(scores[k] - top);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

Matrix to_matrix(std::span<const std::vector<double>> features) {
  if (features.empty()) return Matrix();
  const auto d = features.front().size();
  Matrix m(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw DimensionError(d, features[i].size());
    for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
  }
  return m;
}

}  // namespace clutter
