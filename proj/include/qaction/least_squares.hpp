#pragma once

// Levenberg-Marquardt on a small parameter vector with an analytic Jacobian,
// plus the rank and covariance checks shared by the 1-D and 2-D fitters.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace qaction::lsq {

/// Fills residuals r and Jacobian J (rows = residuals) at theta. Returns false
/// when theta is infeasible (e.g. a boundary-value solve failed there).
using Evaluator =
    std::function<bool(const Eigen::VectorXd& theta, Eigen::VectorXd& r, Eigen::MatrixXd& J)>;

struct Settings {
  std::size_t max_iter = 200;
  /// Largest |cos| between the residual vector and a Jacobian column.
  double gradient_tol = 1e-8;
  /// Relative parameter change below which an accepted step ends the run.
  double step_tol = 1e-12;
};

struct Outcome {
  Eigen::VectorXd theta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double chi2 = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Throws SolverError when theta0 is infeasible.
Outcome levenberg_marquardt(const Evaluator& evaluate, Eigen::VectorXd theta0,
                            const Settings& settings);

/// Throws DegenerateFitError (null direction in parameter units) when the
/// column-scaled Jacobian has condition number above 1e10.
void require_full_rank(const Eigen::MatrixXd& jacobian, const std::vector<std::string>& names);

/// Gauss-Newton covariance (J^T J)^-1 scaled by chi2 / dof (dof >= 1).
Eigen::MatrixXd covariance(const Eigen::MatrixXd& jacobian, double chi2);

}  // namespace qaction::lsq
