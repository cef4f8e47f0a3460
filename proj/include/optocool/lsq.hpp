#pragma once

// Damped nonlinear least squares (Levenberg-Marquardt with Marquardt diagonal
// scaling) used by every fit in the library.

#include <functional>
#include <limits>
#include <vector>

namespace optocool {

struct LsqProblem {
  std::size_t residual_count = 0;
  /// r(p), resized by the caller to residual_count.
  std::function<void(const std::vector<double>& p, std::vector<double>& r)> residuals;
  /// Optional analytic Jacobian, row-major residual_count x p.size(). When
  /// empty, central differences are used.
  std::function<void(const std::vector<double>& p, std::vector<double>& jac)> jacobian;
};

struct LsqOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;     ///< relative parameter step
  double residual_tolerance = 1e-12; ///< relative change of the residual sum of squares
  std::vector<double> lower;         ///< optional box bounds, same size as p
  std::vector<double> upper;
  bool throw_on_failure = true;      ///< throw ConvergenceError when max_iterations is hit
};

struct LsqResult {
  std::vector<double> params;
  std::vector<double> std_error;     ///< empty when J^T J is singular
  std::vector<double> covariance; ///< row-major, scaled by RSS / (n - p)
  double residual_norm = 0.0;     ///< sqrt of the residual sum of squares
  bool converged = false;
  int iterations = 0;
  std::vector<bool> at_bound;     ///< per parameter, when bounds are set
};

LsqResult levenberg_marquardt(const LsqProblem& problem, std::vector<double> p0,
                              const LsqOptions& options = {});

/// Covariance and standard errors from a Jacobian at the optimum, using the
/// pseudo-inverse of J^T J scaled by rss / dof. Returns false when J^T J is rank deficient.
bool covariance_from_jacobian(const std::vector<double>& jac, std::size_t rows, std::size_t cols,
                              double rss, std::vector<double>& covariance,
                              std::vector<double>& std_error);

} // namespace optocool
