#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clutter/scan.hpp"

namespace clutter {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using ProbabilityVector = std::array<double, kClassCount>;

// Numerically stable softmax over the four class scores.
ProbabilityVector softmax(const ProbabilityVector& scores);

// Lowest index wins ties.
int argmax(std::span<const double> values);

// Rows of `features` stacked into an n x d matrix.
Matrix to_matrix(std::span<const std::vector<double>> features);

}  // namespace clutter
