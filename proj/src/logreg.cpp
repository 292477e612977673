#include "clutter/logreg.hpp"

#include <cmath>

#include "clutter/errors.hpp"

namespace clutter::ml {

Matrix SoftmaxLinear::scores(const Matrix& x) const {
  Matrix s = x * weights.transpose();
  s.rowwise() += bias.transpose();
  return s;
}

double logreg_objective(const SoftmaxLinear& model, const Matrix& x, std::span<const int> y, double l2,
                        SoftmaxLinear* grad) {
  const auto n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw DimensionError(static_cast<std::size_t>(n), y.size());
  Matrix s = model.scores(x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = s.row(i).maxCoeff();
    s.row(i).array() = (s.row(i).array() - top).exp();
    const double z = s.row(i).sum();
    s.row(i) /= z;
    loss -= std::log(std::max(s(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  loss /= static_cast<double>(n);
  loss += 0.5 * l2 * model.weights.squaredNorm();
  if (grad) {
    // s now holds probabilities; subtract the one-hot target.
    for (Eigen::Index i = 0; i < n; ++i) s(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    s /= static_cast<double>(n);
    grad->weights = s.transpose() * x + l2 * model.weights;
    grad->bias = s.colwise().sum().transpose();
  }
  return loss;
}

SoftmaxLinear train_logreg(const Matrix& x, std::span<const int> y, const LogRegParams& params, int classes,
                           LogRegTrace* trace) {
  SoftmaxLinear model{Matrix::Zero(classes, x.cols()), Vector::Zero(classes)};
  SoftmaxLinear grad;
  SoftmaxLinear trial;
  double loss = logreg_objective(model, x, y, params.l2, &grad);
  double step = 1.0;
  int it = 0;
  double gnorm = std::max(grad.weights.cwiseAbs().maxCoeff(), grad.bias.cwiseAbs().maxCoeff());
  for (; it < params.max_iterations && gnorm >= params.grad_tol; ++it) {
    const double g2 = grad.weights.squaredNorm() + grad.bias.squaredNorm();
    step = std::min(step * 2.0, 1e6);
    double trial_loss = 0.0;
    while (true) {
      trial.weights = model.weights - step * grad.weights;
      trial.bias = model.bias - step * grad.bias;
      trial_loss = logreg_objective(trial, x, y, params.l2);
      if (trial_loss <= loss - 1e-4 * step * g2 || step < 1e-12) break;
      step *= 0.5;
    }
    if (step < 1e-12) break;
    model = trial;
    loss = logreg_objective(model, x, y, params.l2, &grad);
    gnorm = std::max(grad.weights.cwiseAbs().maxCoeff(), grad.bias.cwiseAbs().maxCoeff());
  }
  if (trace) {
    trace->iterations = it;
    trace->final_grad_norm = gnorm;
    trace->converged = gnorm < params.grad_tol;
  }
  return model;
}

}  // namespace clutter::ml
