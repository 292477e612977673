#include "clutter/adaboost.hpp"

#include <cmath>
#include <numeric>

#include "clutter/errors.hpp"

namespace clutter::ml {

double samme_alpha(double error) {
  if (error <= 0.0) return kMaxAlpha;
  return std::min(std::log((1.0 - error) / error) + std::log(kSammeClasses - 1.0), kMaxAlpha);
}

AdaBoostRound adaboost_round(const Matrix& x, std::span<const int> y, std::span<const double> weights, Rng& rng) {
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("boosting weights must be positive");
  }
  AdaBoostRound round;
  round.stump = fit_tree(x, y, weights, TreeParams{1, 0}, rng);

  std::vector<char> missed(y.size());
  double error = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Eigen::VectorXd row = x.row(static_cast<Eigen::Index>(i));
    missed[i] = round.stump.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) != y[i];
    if (missed[i]) error += weights[i];
  }
  round.error = error;
  round.weights.assign(weights.begin(), weights.end());
  if (error >= 1.0 - 1.0 / kSammeClasses) {
    round.status = RoundStatus::rejected;
    return round;
  }
  round.alpha = samme_alpha(error);
  if (error <= 0.0) {
    round.status = RoundStatus::perfect;
    return round;
  }
  const double boost = std::exp(round.alpha);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (missed[i]) round.weights[i] *= boost;
    total += round.weights[i];
  }
  for (auto& w : round.weights) w /= total;
  return round;
}

std::array<double, kClassCount> AdaBoostModel::class_scores(std::span<const double> row) const {
  std::array<double, kClassCount> scores{};
  for (std::size_t t = 0; t < stumps.size(); ++t) scores[static_cast<std::size_t>(stumps[t].predict(row))] += alphas[t];
  return scores;
}

AdaBoostModel fit_adaboost(const Matrix& x, std::span<const int> y, const AdaBoostParams& params,
                           std::uint64_t seed, AdaBoostTrace* trace) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  Rng rng(seed);
  AdaBoostModel model;
  for (int r = 0; r < params.rounds; ++r) {
    AdaBoostRound round = adaboost_round(x, y, weights, rng);
    if (trace) ++trace->rounds_run;
    if (round.status == RoundStatus::rejected) break;
    model.stumps.push_back(std::move(round.stump));
    model.alphas.push_back(round.alpha);
    weights = std::move(round.weights);
    if (trace) trace->weight_sums.push_back(std::accumulate(weights.begin(), weights.end(), 0.0));
    if (round.status == RoundStatus::perfect) break;
  }
  return model;
}

}  // namespace clutter::ml
