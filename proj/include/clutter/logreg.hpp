#pragma once

#include <span>

#include "clutter/linalg.hpp"

namespace clutter::ml {

struct LogRegParams {
  double l2 = 1e-4;
  int max_iterations = 2000;
  double grad_tol = 1e-6;
};

// Multinomial softmax regression: scores = W x + b, W is classes x d.
struct SoftmaxLinear {
  Matrix weights;
  Vector bias;

  // One row of class scores per row of x.
  Matrix scores(const Matrix& x) const;
};

// Mean cross-entropy plus (l2 / 2) ||W||^2 (bias unpenalized). Fills `grad`
// when non-null.
double logreg_objective(const SoftmaxLinear& model, const Matrix& x, std::span<const int> y, double l2,
                        SoftmaxLinear* grad = nullptr);

struct LogRegTrace {
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
};

// Full-batch gradient descent with Armijo backtracking from a zero start.
SoftmaxLinear train_logreg(const Matrix& x, std::span<const int> y, const LogRegParams& params,
                           int classes = static_cast<int>(kClassCount), LogRegTrace* trace = nullptr);

}  // namespace clutter::ml
