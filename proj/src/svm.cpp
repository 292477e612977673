#include "clutter/svm.hpp"

#include <cmath>
#include <limits>

#include "clutter/errors.hpp"

namespace clutter::ml {

namespace {

constexpr double kTau = 1e-12;

double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double poly_kernel(std::span<const double> x, std::span<const double> z, double gamma, double coef0, int degree) {
  if (x.size() != z.size()) throw DimensionError(x.size(), z.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
  return ipow(gamma * dot + coef0, degree);
}

Matrix PolyKernel::gram(const Matrix& a, const Matrix& b) const {
  Matrix g = a * b.transpose();
  return g.unaryExpr([this](double v) { return ipow(gamma * v + coef0, degree); });
}

double scale_gamma(const Matrix& x) {
  if (x.size() == 0) return 1.0;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

double dual_objective(const Matrix& kernel, std::span<const double> labels, const Vector& alphas) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  Vector ay(n);
  for (Eigen::Index i = 0; i < n; ++i) ay(i) = alphas(i) * labels[static_cast<std::size_t>(i)];
  return alphas.sum() - 0.5 * ay.dot(kernel * ay);
}

SmoResult smo_solve(const Matrix& kernel, std::span<const double> labels, const SmoParams& params) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (kernel.rows() != n || kernel.cols() != n) throw DimensionError(labels.size(), static_cast<std::size_t>(kernel.rows()));
  for (double y : labels) {
    if (y != 1.0 && y != -1.0) throw DomainError("SVM labels must be +1 or -1");
  }
  const double c = params.c;
  auto y = [&](Eigen::Index i) { return labels[static_cast<std::size_t>(i)]; };
  auto q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * kernel(i, j); };

  SmoResult result;
  result.alphas = Vector::Zero(n);
  Vector& alpha = result.alphas;
  // Gradient of 1/2 a'Qa - e'a.
  Vector grad = Vector::Constant(n, -1.0);

  auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c); };

  while (true) {
    // Working set: i maximizes -y G over I_up; j minimizes the second-order
    // decrease over I_low.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y(t) * grad(t) >= gmax) {
        if (-y(t) * grad(t) > gmax || i < 0) i = t;
        gmax = -y(t) * grad(t);
      }
    }
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y(t) * grad(t);
      gmin = std::min(gmin, v);
      if (i < 0) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double a = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
        if (a <= 0.0) a = kTau;
        const double score = -(b * b) / a;
        if (score < best) {
          best = score;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax - gmin <= params.tol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= params.max_iterations) break;
    ++result.iterations;

    const double old_ai = alpha(i);
    const double old_aj = alpha(j);
    if (y(i) != y(j)) {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) {
          alpha(j) = 0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }
    const double d_ai = alpha(i) - old_ai;
    const double d_aj = alpha(j) - old_aj;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * d_ai + q(t, j) * d_aj;
  }

  // rho from free multipliers, else the midpoint of the feasible interval.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= c) {
      if (y(t) < 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else if (alpha(t) <= 0) {
      if (y(t) > 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  double rho = 0.0;
  if (free > 0) {
    rho = sum_free / free;
  } else if (std::isfinite(upper) && std::isfinite(lower)) {
    rho = 0.5 * (upper + lower);
  } else if (std::isfinite(upper)) {
    rho = upper;
  } else if (std::isfinite(lower)) {
    rho = lower;
  }
  result.bias = -rho;
  return result;
}

std::array<double, kClassCount> SvmModel::decision_values(std::span<const double> row) const {
  Eigen::Map<const Eigen::RowVectorXd> r(row.data(), static_cast<Eigen::Index>(row.size()));
  const Matrix values = decision_values(Matrix(r));
  std::array<double, kClassCount> out{};
  for (std::size_t k = 0; k < kClassCount; ++k) out[k] = values(0, static_cast<Eigen::Index>(k));
  return out;
}

Matrix SvmModel::decision_values(const Matrix& x) const {
  Matrix values(x.rows(), static_cast<Eigen::Index>(kClassCount));
  if (support.rows() == 0) {
    values.setZero();
  } else {
    values = kernel.gram(x, support) * coef;
  }
  for (std::size_t k = 0; k < kClassCount; ++k) values.col(static_cast<Eigen::Index>(k)).array() += bias[k];
  return values;
}

SvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params) {
  const auto n = x.rows();
  SvmModel model;
  model.kernel = {params.gamma > 0.0 ? params.gamma : scale_gamma(x), params.coef0, params.degree};
  const Matrix gram = model.kernel.gram(x, x);
  Matrix full_coef = Matrix::Zero(n, static_cast<Eigen::Index>(kClassCount));
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < kClassCount; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] == static_cast<int>(k) ? 1.0 : -1.0;
    }
    const SmoResult r = smo_solve(gram, labels, {params.c, params.tol, params.max_iterations});
    for (Eigen::Index i = 0; i < n; ++i) full_coef(i, static_cast<Eigen::Index>(k)) = r.alphas(i) * labels[static_cast<std::size_t>(i)];
    model.bias[k] = r.bias;
    model.converged[k] = r.converged;
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((full_coef.row(i).array() != 0.0).any()) keep.push_back(i);
  }
  model.support.resize(static_cast<Eigen::Index>(keep.size()), x.cols());
  model.coef.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(kClassCount));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    model.support.row(static_cast<Eigen::Index>(r)) = x.row(keep[r]);
    model.coef.row(static_cast<Eigen::Index>(r)) = full_coef.row(keep[r]);
  }
  return model;
}

}  // namespace clutter::ml
