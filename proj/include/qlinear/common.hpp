#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace qlinear {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Raised when training produces a non-finite loss. Maps to exit code 2 in the CLI.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qlinear
