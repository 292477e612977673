#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "clutter/scan.hpp"

namespace clutter {

using FeatureVector = std::vector<double>;

FeatureVector vectorize(const Scan& scan);

// Box-Cox power transform; throws DomainError for x <= 0.
double boxcox_apply(double x, double lambda);
// Inverse of boxcox_apply; throws DomainError when y lies outside the
// transform's image for this lambda.
double boxcox_inverse(double y, double lambda);

// Box-Cox profile log-likelihood, -(n/2) ln var(y) + (lambda - 1) sum ln x,
// with var the population variance of the transformed samples.
double boxcox_log_likelihood(std::span<const double> samples, double lambda);

inline constexpr double kLambdaMin = -5.0;
inline constexpr double kLambdaMax = 5.0;
inline constexpr double kLambdaTol = 1e-4;

// Maximum-likelihood lambda on [-5, 5] by golden-section search. Throws
// InsufficientDataError for fewer than 3 samples, DomainError for
// non-positive samples and DegenerateFeatureError when all samples are equal.
double fit_boxcox_lambda(std::span<const double> samples);

inline constexpr double kStdFloor = 1e-12;

// Per-feature Box-Cox followed by standardization. A feature whose fitted std
// sits at the floor is degenerate and always maps to 0.
struct FeatureTransformer {
  double epsilon = kMinRange;
  std::vector<double> lambdas;
  std::vector<double> means;
  std::vector<double> stds;

  std::size_t dimension() const { return lambdas.size(); }
  bool degenerate(std::size_t j) const { return stds[j] <= kStdFloor; }

  friend bool operator==(const FeatureTransformer&, const FeatureTransformer&) = default;
};

// Throws InsufficientDataError for fewer than 3 rows and DimensionError for
// ragged rows.
FeatureTransformer fit_feature_transformer(std::span<const FeatureVector> train);
FeatureVector apply_transformer(const FeatureTransformer& t, std::span<const double> v);

nlohmann::json transformer_to_json(const FeatureTransformer& t);
FeatureTransformer transformer_from_json(const nlohmann::json& j);

}  // namespace clutter
