#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "clutter/tree.hpp"

namespace clutter::ml {

// SAMME with depth-1 stumps over K = 4 classes.
struct AdaBoostParams {
  int rounds = 200;
};

inline constexpr double kSammeClasses = static_cast<double>(kClassCount);
// ln(1e10): weight given to a stump with zero training error.
inline const double kMaxAlpha = std::log(1e10);

enum class RoundStatus {
  accepted,
  perfect,   // err == 0; alpha capped, boosting stops after this round
  rejected,  // err >= 1 - 1/K; stump discarded, boosting stops
};

struct AdaBoostRound {
  DecisionTree stump;
  double error = 0.0;
  double alpha = 0.0;
  std::vector<double> weights;  // renormalized; unchanged when rejected
  RoundStatus status = RoundStatus::accepted;
};

double samme_alpha(double error);

// Weights must be positive and sum to 1.
AdaBoostRound adaboost_round(const Matrix& x, std::span<const int> y, std::span<const double> weights, Rng& rng);

struct AdaBoostModel {
  std::vector<DecisionTree> stumps;
  std::vector<double> alphas;

  // Sum of alphas of the stumps voting for each class.
  std::array<double, kClassCount> class_scores(std::span<const double> row) const;
};

struct AdaBoostTrace {
  std::vector<double> weight_sums;  // after each round
  int rounds_run = 0;
};

AdaBoostModel fit_adaboost(const Matrix& x, std::span<const int> y, const AdaBoostParams& params,
                           std::uint64_t seed, AdaBoostTrace* trace = nullptr);

}  // namespace clutter::ml
