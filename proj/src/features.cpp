#include "clutter/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clutter/errors.hpp"

namespace clutter {

namespace {

// Below this |lambda| the transform is evaluated through expm1 to stay
// continuous at 0.
constexpr double kLambdaZero = 1e-12;

}  // namespace

FeatureVector vectorize(const Scan& scan) { return scan.ranges(); }

double boxcox_apply(double x, double lambda) {
  if (!(x > 0.0)) throw DomainError("Box-Cox requires x > 0, got " + std::to_string(x));
  const double lx = std::log(x);
  if (std::abs(lambda) < kLambdaZero) return lx;
  return std::expm1(lambda * lx) / lambda;
}

double boxcox_inverse(double y, double lambda) {
  if (std::abs(lambda) < kLambdaZero) return std::exp(y);
  const double base = lambda * y;
  if (!(base > -1.0)) {
    throw DomainError("value " + std::to_string(y) + " is outside the Box-Cox image for lambda " +
                      std::to_string(lambda));
  }
  return std::exp(std::log1p(base) / lambda);
}

double boxcox_log_likelihood(std::span<const double> samples, double lambda) {
  const double n = static_cast<double>(samples.size());
  double sum_log = 0.0;
  double mean = 0.0;
  std::vector<double> y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sum_log += std::log(samples[i]);
    y[i] = boxcox_apply(samples[i], lambda);
    mean += y[i];
  }
  mean /= n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double var = ss / n;
  return -0.5 * n * std::log(var) + (lambda - 1.0) * sum_log;
}

double fit_boxcox_lambda(std::span<const double> samples) {
  if (samples.size() < 3) {
    throw InsufficientDataError("Box-Cox fit needs at least 3 samples, got " + std::to_string(samples.size()));
  }
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("Box-Cox fit requires finite positive samples");
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) throw DegenerateFeatureError("all samples are equal");

  // Golden-section maximization; non-finite likelihoods (variance underflow)
  // rank below every finite value.
  auto objective = [&](double lambda) {
    const double ll = boxcox_log_likelihood(samples, lambda);
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLambdaMin;
  double b = kLambdaMax;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > kLambdaTol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double best = 0.5 * (a + b);
  // The bracket never evaluates the interval ends; prefer them when they win.
  double f_best = objective(best);
  for (double edge : {kLambdaMin, kLambdaMax}) {
    if (std::abs(edge - best) < 10 * kLambdaTol) {
      const double fe = objective(edge);
      if (fe > f_best) {
        best = edge;
        f_best = fe;
      }
    }
  }
  return std::clamp(best, kLambdaMin, kLambdaMax);
}

FeatureTransformer fit_feature_transformer(std::span<const FeatureVector> train) {
  if (train.size() < 3) {
    throw InsufficientDataError("feature transformer needs at least 3 training rows, got " +
                                std::to_string(train.size()));
  }
  const std::size_t dim = train.front().size();
  for (const auto& row : train) {
    if (row.size() != dim) throw DimensionError(dim, row.size());
  }
  FeatureTransformer t;
  t.lambdas.assign(dim, 1.0);
  t.means.assign(dim, 0.0);
  t.stds.assign(dim, 1.0);
  std::vector<double> column(train.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < train.size(); ++i) column[i] = std::max(train[i][j], t.epsilon);
    double lambda = 1.0;
    try {
      lambda = fit_boxcox_lambda(column);
    } catch (const DegenerateFeatureError&) {
      lambda = 1.0;
    }
    double mean = 0.0;
    for (double& x : column) {
      x = boxcox_apply(x, lambda);
      mean += x;
    }
    mean /= static_cast<double>(column.size());
    double ss = 0.0;
    for (double x : column) ss += (x - mean) * (x - mean);
    const double std = std::sqrt(ss / static_cast<double>(column.size()));
    t.lambdas[j] = lambda;
    t.means[j] = mean;
    t.stds[j] = std::max(std, kStdFloor);
  }
  return t;
}

FeatureVector apply_transformer(const FeatureTransformer& t, std::span<const double> v) {
  if (v.size() != t.dimension()) throw DimensionError(t.dimension(), v.size());
  FeatureVector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (t.degenerate(j)) {
      out[j] = 0.0;
      continue;
    }
    double x = v[j];
    if (!std::isfinite(x)) x = kMaxRange;
    x = std::max(x, t.epsilon);
    out[j] = (boxcox_apply(x, t.lambdas[j]) - t.means[j]) / t.stds[j];
  }
  return out;
}

nlohmann::json transformer_to_json(const FeatureTransformer& t) {
  return {{"epsilon", t.epsilon}, {"lambdas", t.lambdas}, {"means", t.means}, {"stds", t.stds}};
}

FeatureTransformer transformer_from_json(const nlohmann::json& j) {
  FeatureTransformer t;
  t.epsilon = j.at("epsilon").get<double>();
  t.lambdas = j.at("lambdas").get<std::vector<double>>();
  t.means = j.at("means").get<std::vector<double>>();
  t.stds = j.at("stds").get<std::vector<double>>();
  if (t.means.size() != t.lambdas.size() || t.stds.size() != t.lambdas.size()) {
    throw DataError("transformer arrays have mismatched lengths");
  }
  return t;
}

}  // namespace clutter
