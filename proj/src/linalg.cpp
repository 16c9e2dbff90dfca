#include "qaction/linalg.hpp"

#include <lapacke.h>

#include <vector>

#include "qaction/errors.hpp"

namespace qaction::linalg {

EigenPairs symmetric_eigen(const Eigen::MatrixXd& a, std::size_t n_lowest) {
  const auto n = static_cast<lapack_int>(a.rows());
  if (a.rows() != a.cols()) throw ArgumentError("eigensolver needs a square matrix");
  if (n_lowest == 0 || n_lowest > static_cast<std::size_t>(n)) n_lowest = static_cast<std::size_t>(n);

  EigenPairs out;
  if (4 * n_lowest < static_cast<std::size_t>(n)) {
    Eigen::MatrixXd work = a;
    const auto m_req = static_cast<lapack_int>(n_lowest);
    lapack_int found = 0;
    out.values.resize(n);
    out.vectors.resize(n, m_req);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(m_req));
    const lapack_int info =
        LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1, m_req,
                       0.0, &found, out.values.data(), out.vectors.data(), n, support.data());
    if (info != 0 || found != m_req) throw Error("dsyevr failed");
    out.values.conservativeResize(m_req);
  } else {
    out.vectors = a;
    out.values.resize(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                                           out.values.data());
    if (info != 0) throw Error("dsyevd failed");
    if (n_lowest < static_cast<std::size_t>(n)) {
      out.values.conservativeResize(static_cast<Eigen::Index>(n_lowest));
      out.vectors.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(n_lowest));
    }
  }
  return out;
}

bool solve_spd_tridiagonal(std::span<const double> diag, std::span<const double> off, double shift,
                           std::span<double> rhs) {
  const auto n = static_cast<lapack_int>(diag.size());
  if (n == 0) return true;
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(off.begin(), off.end());
  for (double& v : d) v += shift;
  const lapack_int info = LAPACKE_dptsv(LAPACK_COL_MAJOR, n, 1, d.data(), e.data(), rhs.data(), n);
  return info == 0;
}

bool solve_spd_banded(std::size_t n, std::size_t kd, std::span<double> band,
                      std::span<double> rhs) {
  const auto nn = static_cast<lapack_int>(n);
  const auto kk = static_cast<lapack_int>(kd);
  const lapack_int info = LAPACKE_dpbsv(LAPACK_COL_MAJOR, 'L', nn, kk, 1, band.data(), kk + 1,
                                        rhs.data(), nn);
  return info == 0;
}

}  // namespace qaction::linalg
