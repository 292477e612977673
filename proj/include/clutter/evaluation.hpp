#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clutter/model.hpp"

namespace clutter::eval {

struct FoldAssignment {
  std::vector<int> fold_of;  // per row
  int k = 0;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

// Per class: seeded shuffle, then round-robin dealing that continues where
// the previous class stopped. Throws StratificationError naming any present
// class with fewer than k rows.
FoldAssignment stratified_folds(std::span<const ClassLabel> labels, int k, std::uint64_t seed);

double accuracy(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// One point per distinct score (descending), preceded by the (0, 1) anchor.
// Throws UndefinedCurveError when there are no positives.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const bool> positives);

// Step-wise sum of (R_n - R_{n-1}) * P_n over a curve from pr_curve.
double average_precision(std::span<const PrPoint> curve);
double average_precision(std::span<const double> scores, std::span<const bool> positives);

struct FoldStats {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation
};

FoldStats fold_stats(std::span<const double> values);

struct ClassCurve {
  ClassLabel label = ClassLabel::corridor;
  bool defined = false;
  double ap = 0.0;
  std::vector<PrPoint> curve;
};

struct VariantReport {
  std::string name;
  std::vector<double> folds;
  double mean = 0.0;
  double std = 0.0;
  std::vector<ClassCurve> per_class;
  std::array<std::array<std::size_t, kClassCount>, kClassCount> confusion{};  // [truth][predicted]
  nlohmann::json spec;
  std::vector<ProbabilityVector> oof_proba;  // not serialized
};

struct Report {
  std::string dataset_fingerprint;
  std::uint64_t seed = 0;
  int folds = 0;
  std::vector<VariantReport> variants;
  nlohmann::json config;
};

// Fits transformer and model per fold on the k-1 training folds and scores
// the held-out fold; out-of-fold probabilities are pooled for PR/AP. Folds
// run on up to `threads` workers (0: hardware concurrency); results do not
// depend on scheduling.
VariantReport cross_validate(const ModelSpec& spec, const Dataset& dataset, int k, std::uint64_t seed,
                             unsigned threads = 0);

Report run_report(std::span<const ModelSpec> specs, const Dataset& dataset, int k, std::uint64_t seed,
                  unsigned threads = 0);

// Rebuilds the summary statistics of a variant from its fold list and pooled
// predictions.
VariantReport reduce_variant(std::string name, std::vector<double> folds, std::span<const ProbabilityVector> oof,
                             std::span<const ClassLabel> truth);

nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

}  // namespace clutter::eval
