#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sqz {

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct FitResult {
  std::vector<std::string> parameter_names;
  std::vector<double> values;
  std::vector<double> standard_errors;
  std::vector<double> covariance;  // row-major, n x n
  double residual_sum_of_squares = 0.0;
  long degrees_of_freedom = 0;
  bool converged = false;
  int iterations = 0;
  std::size_t num_residuals = 0;
  double gradient_norm = 0.0;  // projected gradient inf-norm at the solution
  double condition_number = 0.0;  // of the correlation-scaled normal matrix
  std::string message;
  std::vector<std::string> warnings;

  std::size_t size() const { return values.size(); }
  double cov(std::size_t i, std::size_t j) const { return covariance[i * values.size() + j]; }
  /// Index of a named parameter; throws InvalidArgument when absent.
  std::size_t index_of(const std::string& name) const;
  double value(const std::string& name) const { return values[index_of(name)]; }
  double standard_error(const std::string& name) const { return standard_errors[index_of(name)]; }
};

/// Maps a parameter vector to a residual vector. Must be pure.
using ResidualFunction = std::function<void(std::span<const double> params, std::vector<double>& residuals)>;

struct LeastSquaresOptions {
  int max_iterations = 500;
  double cost_relative_tolerance = 1e-12;
  double gradient_tolerance = 1e-10;
  // Reciprocal condition number below which the normal matrix is singular.
  double singular_rcond = 1e-14;
  // Correlation-scaled condition number above which a flat direction is flagged.
  double flat_direction_condition = 1e8;
};

/// Central-difference Jacobian (row-major, residuals x params) with step
/// max(1e-8, 1e-8*|theta|). Falls back to a one-sided stencil when the
/// central stencil would leave the bounds.
std::vector<double> numeric_jacobian(const ResidualFunction& fn, std::span<const double> params,
                                     std::span<const Bounds> bounds, std::size_t num_residuals);

/// Bounded Levenberg-Marquardt. Bounds are enforced by projection and the
/// covariance is RSS/dof * (J^T J)^-1 over the parameters not pinned at a
/// bound. Throws NumericalError on non-finite residuals.
FitResult least_squares(const ResidualFunction& fn, std::vector<double> initial_guess,
                        std::span<const Bounds> bounds, std::vector<std::string> names = {},
                        const LeastSquaresOptions& options = {});

}  // namespace sqz
