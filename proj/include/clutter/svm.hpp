#pragma once

#include <array>
#include <span>

#include "clutter/linalg.hpp"

namespace clutter::ml {

// (gamma * <x, z> + coef0) ^ degree
double poly_kernel(std::span<const double> x, std::span<const double> z, double gamma, double coef0, int degree);

struct PolyKernel {
  double gamma = 1.0;
  double coef0 = 0.0;
  int degree = 3;

  // Gram matrix between the rows of a and the rows of b.
  Matrix gram(const Matrix& a, const Matrix& b) const;
};

// gamma = 1 / (d * var(X)) over every entry of X; 1 when X has no spread.
double scale_gamma(const Matrix& x);

struct SmoParams {
  double c = 1.0;
  double tol = 1e-3;
  long max_iterations = 1'000'000;
};

struct SmoResult {
  Vector alphas;
  double bias = 0.0;
  bool converged = false;
  long iterations = 0;
};

// Binary soft-margin dual by SMO with second-order working-set selection.
// Decision value: sum_i alpha_i y_i K(x_i, x) + bias. Labels must be +/-1.
SmoResult smo_solve(const Matrix& kernel, std::span<const double> labels, const SmoParams& params);

// sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
double dual_objective(const Matrix& kernel, std::span<const double> labels, const Vector& alphas);

struct SvmParams {
  double c = 1.0;
  int degree = 3;
  double coef0 = 0.0;
  double gamma = 0.0;  // <= 0 selects scale_gamma on the training matrix
  double tol = 1e-3;
  long max_iterations = 1'000'000;
};

// One-vs-rest polynomial SVM; rows of `support` are shared by the four
// machines and `coef(i, k) = alpha_i y_i` for machine k.
struct SvmModel {
  PolyKernel kernel;
  Matrix support;
  Matrix coef;
  std::array<double, kClassCount> bias{};
  std::array<bool, kClassCount> converged{};

  std::array<double, kClassCount> decision_values(std::span<const double> row) const;
  // One row of decision values per row of x.
  Matrix decision_values(const Matrix& x) const;
};

SvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params);

}  // namespace clutter::ml
