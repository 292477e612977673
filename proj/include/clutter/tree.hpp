#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "clutter/linalg.hpp"
#include "clutter/rng.hpp"

namespace clutter::ml {

// 1 - sum p_k^2 over (possibly weighted) class counts. Throws DomainError
// for a zero or negative total.
double gini_impurity(std::span<const double> counts);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, kClassCount> distribution{};  // normalized weighted class mass

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::array<double, kClassCount>& distribution(std::span<const double> row) const;
  int predict(std::span<const double> row) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = 100;
  // 0 evaluates every feature at each node (stump/CART mode).
  int features_per_split = 0;
};

// Weighted CART. Rows with zero weight are ignored. Candidate thresholds are
// midpoints between consecutive distinct values; when none of the sampled
// features admits a split, further features are drawn until one does.
// Ties break by lowest feature index, then lowest threshold.
DecisionTree fit_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                      const TreeParams& params, Rng& rng);

struct ForestParams {
  int trees = 100;
  int max_depth = 100;
  int features_per_split = -1;  // -1: round(sqrt(d))
  bool bootstrap = true;
};

struct Forest {
  std::vector<DecisionTree> trees;

  // Fraction of trees voting for each class.
  std::array<double, kClassCount> vote_fractions(std::span<const double> row) const;
};

Forest fit_forest(const Matrix& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed);

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace clutter::ml
