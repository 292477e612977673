#include <doctest.h>

#include <cmath>
#include <numbers>

#include "clutter/errors.hpp"
#include "clutter/features.hpp"
#include "clutter/rng.hpp"
#include "clutter/simulator.hpp"
#include "test_support.hpp"
#include "oracles.hpp"

using namespace clutter;
using namespace oracles;

TEST_CASE("vectorize is the identity on ranges") {
  CHECK(vectorize(testsupport::constant_scan(5.0)) == std::vector<double>(271, 5.0));
  std::vector<double> raw(271, 2.0);
  raw[0] = 0.0005;
  CHECK(vectorize(validate_scan(raw))[0] == 0.001);
}

TEST_CASE("boxcox_apply definition") {
  CHECK(boxcox_apply(3.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(boxcox_apply(std::numbers::e, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(boxcox_apply(3.0, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(boxcox_apply(4.0, -1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(boxcox_apply(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(boxcox_apply(-1.0, 0.5), DomainError);
  // Continuity at lambda = 0.
  for (double x : {0.001, 0.5, 2.0, 30.0}) {
    CHECK(std::abs(boxcox_apply(x, 1e-9) - std::log(x)) < 1e-7);
    CHECK(std::abs(boxcox_apply(x, -1e-9) - std::log(x)) < 1e-7);
  }
}

TEST_CASE("boxcox_apply is strictly increasing") {
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const double lambda = rng.uniform(-5.0, 5.0);
    double a = rng.uniform(0.001, 30.0);
    double b = rng.uniform(0.001, 30.0);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    CHECK(boxcox_apply(a, lambda) < boxcox_apply(b, lambda));
  }
}

TEST_CASE("boxcox_inverse round trip") {
  // y carries one rounding of relative size 2^-53 and dx/x = x^-lambda dy, so
  // near the image boundary (lambda > 0, small x) no double-precision inverse
  // can do better than kappa below. Demand 1e-9 wherever kappa allows it and
  // stay within a small multiple of kappa elsewhere.
  Rng rng(4);
  int well_conditioned = 0;
  for (int t = 0; t < 20000; ++t) {
    const double lambda = rng.uniform(-5.0, 5.0);
    const double x = std::exp(rng.uniform(std::log(0.001), std::log(30.0)));
    const double y = boxcox_apply(x, lambda);
    const double back = boxcox_inverse(y, lambda);
    const double err = std::abs(back - x) / x;
    const double kappa = std::ldexp(std::abs(y), -53) * std::pow(x, -lambda) + 1e-15 * (1.0 + std::abs(std::log(x)));
    if (kappa <= 1e-11) {
      ++well_conditioned;
      CHECK(err <= 1e-9);
    } else {
      CHECK(err <= 8.0 * kappa);
    }
  }
  CHECK(well_conditioned > 15000);
  CHECK(boxcox_inverse(std::log(2.0), 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  // Outside the image: y <= -1/lambda for lambda > 0, y >= -1/lambda for lambda < 0.
  CHECK_THROWS_AS(boxcox_inverse(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(boxcox_inverse(-0.6, 2.0), DomainError);
  CHECK_THROWS_AS(boxcox_inverse(0.5, -2.0), DomainError);
}

TEST_CASE("log-likelihood matches the oracle expression") {
  Rng rng(5);
  std::vector<double> x(50);
  for (auto& v : x) v = std::exp(rng.normal());
  for (double l : {-2.0, -0.5, 0.0, 0.3, 1.0, 2.5}) {
    CHECK(boxcox_log_likelihood(x, l) == doctest::Approx(boxcox_ll(x, l)).epsilon(1e-10));
  }
}

TEST_CASE("fitted lambda matches the grid oracle on 50 seeded samples") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 100);
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(20, 200));
    const int kind = static_cast<int>(seed % 3);
    std::vector<double> x(n);
    for (auto& v : x) {
      const double z = rng.normal();
      v = kind == 0 ? std::exp(0.5 * z) : kind == 1 ? 5.0 + z : std::pow(rng.uniform(0.05, 1.0), 3.0);
    }
    const double fitted = fit_boxcox_lambda(x);
    const double grid = grid_lambda(x);
    CHECK(std::abs(fitted - grid) <= 2e-3);
    CHECK(fitted >= kLambdaMin);
    CHECK(fitted <= kLambdaMax);
  }
}

TEST_CASE("lognormal data gives lambda near 0") {
  Rng rng(1);
  std::vector<double> x(10000);
  for (auto& v : x) v = std::exp(rng.normal());
  const double l = fit_boxcox_lambda(x);
  CHECK(l >= -0.1);
  CHECK(l <= 0.1);
}

TEST_CASE("shifted normal data gives lambda near 1") {
  Rng rng(1);
  std::vector<double> x(10000);
  for (auto& v : x) v = 10.0 + rng.normal();
  const double l = fit_boxcox_lambda(x);
  CHECK(l >= 0.5);
  CHECK(l <= 1.5);
}

TEST_CASE("fit_boxcox_lambda errors") {
  CHECK_THROWS_AS(fit_boxcox_lambda(std::vector<double>{1.0, 2.0}), InsufficientDataError);
  CHECK_THROWS_AS(fit_boxcox_lambda(std::vector<double>{1.0, 2.0, 0.0}), DomainError);
  CHECK_THROWS_AS(fit_boxcox_lambda(std::vector<double>{2.0, 2.0, 2.0, 2.0}), DegenerateFeatureError);
}

TEST_CASE("transformer standardizes the training set") {
  const Dataset d = testsupport::random_dataset(60, 8);
  std::vector<FeatureVector> rows;
  for (const auto& r : d.rows()) rows.push_back(vectorize(r.scan));
  const FeatureTransformer t = fit_feature_transformer(rows);
  CHECK(t.dimension() == 271);
  std::vector<FeatureVector> out;
  for (const auto& r : rows) out.push_back(apply_transformer(t, r));
  for (std::size_t j = 0; j < 271; ++j) {
    CHECK(t.lambdas[j] >= kLambdaMin);
    CHECK(t.lambdas[j] <= kLambdaMax);
    double mean = 0.0;
    for (const auto& r : out) mean += r[j];
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (const auto& r : out) var += (r[j] - mean) * (r[j] - mean);
    var /= static_cast<double>(out.size());
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
}

TEST_CASE("constant columns are degenerate and map to zero") {
  std::vector<FeatureVector> rows(5, FeatureVector(271, 3.0));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i][7] = 1.0 + static_cast<double>(i);
  const FeatureTransformer t = fit_feature_transformer(rows);
  CHECK(t.lambdas[0] == 1.0);
  CHECK(t.degenerate(0));
  CHECK(t.stds[0] >= kStdFloor);
  CHECK_FALSE(t.degenerate(7));
  FeatureVector probe(271, 12.0);
  const auto y = apply_transformer(t, probe);
  CHECK(y[0] == 0.0);
  CHECK(std::isfinite(y[7]));
}

TEST_CASE("lambda = 1 reduces to affine standardization of x - 1") {
  FeatureTransformer t;
  t.lambdas.assign(271, 1.0);
  t.means.assign(271, 2.0);
  t.stds.assign(271, 4.0);
  FeatureVector v(271, 7.0);
  for (double y : apply_transformer(t, v)) CHECK(y == doctest::Approx(((7.0 - 1.0) - 2.0) / 4.0));
}

TEST_CASE("fit errors and determinism") {
  std::vector<FeatureVector> two(2, FeatureVector(271, 1.0));
  CHECK_THROWS_AS(fit_feature_transformer(two), InsufficientDataError);
  std::vector<FeatureVector> ragged(3, FeatureVector(271, 1.0));
  ragged[1].pop_back();
  CHECK_THROWS_AS(fit_feature_transformer(ragged), DimensionError);

  const Dataset d = testsupport::random_dataset(20, 2);
  std::vector<FeatureVector> rows;
  for (const auto& r : d.rows()) rows.push_back(vectorize(r.scan));
  CHECK(fit_feature_transformer(rows) == fit_feature_transformer(rows));
  const auto t = fit_feature_transformer(rows);
  CHECK(transformer_from_json(transformer_to_json(t)) == t);
  const auto j = transformer_to_json(t);
  CHECK(j["lambdas"].size() == 271);
  CHECK(j.contains("epsilon"));
}

TEST_CASE("no NaN or Inf over 10000 random rows") {
  sim::SimConfig cfg;
  cfg.per_class = {10, 10, 10, 10};
  const Dataset train = sim::generate_dataset(cfg);
  std::vector<FeatureVector> rows;
  for (const auto& r : train.rows()) rows.push_back(vectorize(r.scan));
  const FeatureTransformer t = fit_feature_transformer(rows);
  Rng rng(77);
  bool finite = true;
  for (int i = 0; i < 10000; ++i) {
    FeatureVector v(271);
    for (auto& x : v) x = rng.bernoulli(0.05) ? (rng.bernoulli(0.5) ? 0.001 : 30.0) : rng.uniform(0.001, 30.0);
    for (double y : apply_transformer(t, v)) finite = finite && std::isfinite(y);
  }
  CHECK(finite);
}
