#pragma once

// Thin LAPACK-backed dense and banded kernels shared by the solvers.

#include <Eigen/Dense>
#include <cstddef>
#include <span>

namespace qaction::linalg {

struct EigenPairs {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< unit-norm columns
};

/// Lowest n_lowest eigenpairs of a symmetric matrix (0 = all).
EigenPairs symmetric_eigen(const Eigen::MatrixXd& a, std::size_t n_lowest = 0);

/// Solves (T + shift I) x = rhs for symmetric tridiagonal T in place.
/// Returns false when the shifted matrix is not positive definite.
bool solve_spd_tridiagonal(std::span<const double> diag, std::span<const double> off,
                           double shift, std::span<double> rhs);

/// Symmetric positive definite band solve. band holds the lower band in LAPACK
/// 'L' storage: band[(i - j) + j * (kd + 1)] = A(i, j) for 0 <= i - j <= kd.
/// The band array is overwritten. Returns false when not positive definite.
bool solve_spd_banded(std::size_t n, std::size_t kd, std::span<double> band,
                      std::span<double> rhs);

}  // namespace qaction::linalg
