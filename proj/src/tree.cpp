#include "clutter/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clutter/errors.hpp"

namespace clutter::ml {

namespace {

using Counts = std::array<double, kClassCount>;

double gini_of(const Counts& c, double total) {
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double v : c) sum_sq += (v / total) * (v / total);
  return 1.0 - sum_sq;
}

struct Split {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

bool better(const Split& candidate, const Split& best) {
  if (!best.found) return true;
  if (candidate.gain != best.gain) return candidate.gain > best.gain;
  if (candidate.feature != best.feature) return candidate.feature < best.feature;
  return candidate.threshold < best.threshold;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, std::span<const double> w, const TreeParams& p, Rng& rng)
      : x_(x), y_(y), w_(w), params_(p), rng_(rng), features_(static_cast<int>(x.cols())) {
    order_.resize(static_cast<std::size_t>(features_));
    scratch_.reserve(static_cast<std::size_t>(x.rows()));
  }

  std::vector<TreeNode> build() {
    std::vector<int> rows;
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      if (w_[static_cast<std::size_t>(i)] > 0.0) rows.push_back(static_cast<int>(i));
    }
    struct Task {
      int node;
      std::vector<int> rows;
      int depth;
    };
    std::vector<Task> stack;
    nodes_.emplace_back();
    stack.push_back({0, std::move(rows), 0});
    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      Counts counts{};
      double total = 0.0;
      for (int r : task.rows) {
        counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])] += w_[static_cast<std::size_t>(r)];
        total += w_[static_cast<std::size_t>(r)];
      }
      TreeNode& node = nodes_[static_cast<std::size_t>(task.node)];
      for (std::size_t k = 0; k < kClassCount; ++k) node.distribution[k] = total > 0.0 ? counts[k] / total : 0.0;

      const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
      if (pure || task.depth >= params_.max_depth || task.rows.size() < 2) continue;

      const Split split = find_split(task.rows, counts, total);
      if (!split.found) continue;

      std::vector<int> left_rows;
      std::vector<int> right_rows;
      for (int r : task.rows) {
        (x_(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
      }
      const int left = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      TreeNode& parent = nodes_[static_cast<std::size_t>(task.node)];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({left + 1, std::move(right_rows), task.depth + 1});
      stack.push_back({left, std::move(left_rows), task.depth + 1});
    }
    return std::move(nodes_);
  }

 private:
  Split find_split(const std::vector<int>& rows, const Counts& counts, double total) {
    const double parent = gini_of(counts, total) * total;
    std::iota(order_.begin(), order_.end(), 0);
    const int wanted = params_.features_per_split <= 0 ? features_ : std::min(params_.features_per_split, features_);
    Split best;
    // Lazy Fisher-Yates: position i is drawn only when it is examined.
    const bool sample = wanted < features_;
    for (int i = 0; i < features_; ++i) {
      if (i >= wanted && best.found) break;
      if (sample) {
        const auto j = i + static_cast<int>(rng_.below(static_cast<std::uint64_t>(features_ - i)));
        std::swap(order_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(j)]);
      }
      evaluate_feature(order_[static_cast<std::size_t>(i)], rows, counts, total, parent, best);
    }
    return best;
  }

  void evaluate_feature(int f, const std::vector<int>& rows, const Counts& counts, double total, double parent,
                        Split& best) {
    scratch_.clear();
    for (int r : rows) scratch_.push_back({x_(r, f), r});
    std::sort(scratch_.begin(), scratch_.end(), [](const auto& a, const auto& b) {
      return a.first < b.first || (a.first == b.first && a.second < b.second);
    });
    if (scratch_.front().first == scratch_.back().first) return;
    Counts left{};
    double left_w = 0.0;
    for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
      const int r = scratch_[i].second;
      const double w = w_[static_cast<std::size_t>(r)];
      left[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])] += w;
      left_w += w;
      const double v = scratch_[i].first;
      const double next = scratch_[i + 1].first;
      if (v == next) continue;
      Counts right{};
      for (std::size_t k = 0; k < kClassCount; ++k) right[k] = counts[k] - left[k];
      const double right_w = total - left_w;
      const double gain = parent - gini_of(left, left_w) * left_w - gini_of(right, right_w) * right_w;
      double threshold = 0.5 * (v + next);
      if (!(threshold < next)) threshold = v;  // midpoint rounding onto `next`
      Split candidate{true, f, threshold, gain};
      if (better(candidate, best)) best = candidate;
    }
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  TreeParams params_;
  Rng& rng_;
  int features_;
  std::vector<int> order_;
  std::vector<std::pair<double, int>> scratch_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double gini_impurity(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw DomainError("class counts must be non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw DomainError("gini impurity of an empty node is undefined");
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

const std::array<double, kClassCount>& DecisionTree::distribution(std::span<const double> row) const {
  std::size_t n = 0;
  while (!nodes_[n].is_leaf()) {
    const auto& node = nodes_[n];
    n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes_[n].distribution;
}

int DecisionTree::predict(std::span<const double> row) const { return argmax(distribution(row)); }

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    if (!node.is_leaf()) {
      stack.push_back({node.left, d + 1});
      stack.push_back({node.right, d + 1});
    }
  }
  return deepest;
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                      const TreeParams& params, Rng& rng) {
  if (x.rows() == 0) throw DataError("cannot fit a tree on zero rows");
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.size() != weights.size()) {
    throw DimensionError(static_cast<std::size_t>(x.rows()), y.size());
  }
  TreeBuilder builder(x, y, weights, params, rng);
  return DecisionTree(builder.build());
}

std::array<double, kClassCount> Forest::vote_fractions(std::span<const double> row) const {
  std::array<double, kClassCount> votes{};
  for (const auto& tree : trees) votes[static_cast<std::size_t>(tree.predict(row))] += 1.0;
  for (auto& v : votes) v /= static_cast<double>(trees.size());
  return votes;
}

Forest fit_forest(const Matrix& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed) {
  const Rng root(seed);
  const auto n = static_cast<std::size_t>(x.rows());
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.features_per_split = params.features_per_split >= 0
                                       ? params.features_per_split
                                       : static_cast<int>(std::lround(std::sqrt(static_cast<double>(x.cols()))));
  Forest forest;
  forest.trees.reserve(static_cast<std::size_t>(params.trees));
  std::vector<double> weights(n);
  for (int t = 0; t < params.trees; ++t) {
    Rng rng = root.split(static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) weights[static_cast<std::size_t>(rng.below(n))] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    forest.trees.push_back(fit_tree(x, y, weights, tree_params, rng));
  }
  return forest;
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"dist", n.distribution}});
    } else {
      nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"dist", n.distribution}});
    }
  }
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  nodes.reserve(j.size());
  for (const auto& item : j) {
    TreeNode n;
    n.distribution = item.at("dist").get<std::array<double, kClassCount>>();
    if (item.contains("f")) {
      n.feature = item.at("f").get<int>();
      n.threshold = item.at("t").get<double>();
      n.left = item.at("l").get<int>();
      n.right = item.at("r").get<int>();
    }
    nodes.push_back(n);
  }
  if (nodes.empty()) throw DataError("tree has no nodes");
  return DecisionTree(std::move(nodes));
}

}  // namespace clutter::ml
