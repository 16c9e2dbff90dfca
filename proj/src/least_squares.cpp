#include "qaction/least_squares.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qaction/errors.hpp"
#include "qaction/report.hpp"

namespace qaction::lsq {

namespace {

double max_cosine(const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  const Eigen::VectorXd g = j.transpose() * r;
  double worst = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    const double cn = j.col(c).norm();
    if (cn > 0.0) worst = std::max(worst, std::abs(g(c)) / (cn * rn));
  }
  return worst;
}

}  // namespace

Outcome levenberg_marquardt(const Evaluator& evaluate, Eigen::VectorXd theta0,
                            const Settings& settings) {
  Outcome out;
  out.theta = std::move(theta0);
  if (!evaluate(out.theta, out.residuals, out.jacobian)) {
    throw SolverError("least-squares objective is undefined at the starting point",
                      std::numeric_limits<double>::infinity());
  }
  out.chi2 = out.residuals.squaredNorm();
  double lambda = 1e-3;
  Eigen::VectorXd r_trial;
  Eigen::MatrixXd j_trial;

  for (out.iterations = 0; out.iterations < settings.max_iter; ++out.iterations) {
    if (max_cosine(out.jacobian, out.residuals) < settings.gradient_tol) {
      out.converged = true;
      return out;
    }
    const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
    const Eigen::VectorXd jtr = out.jacobian.transpose() * out.residuals;
    Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-300);

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * scale;
      const Eigen::VectorXd delta = a.ldlt().solve(-jtr);
      const Eigen::VectorXd trial = out.theta + delta;
      if (delta.allFinite() && evaluate(trial, r_trial, j_trial)) {
        const double chi2 = r_trial.squaredNorm();
        if (chi2 < out.chi2) {
          const double step = (delta.array() / (trial.array().abs() + 1e-12)).abs().maxCoeff();
          out.theta = trial;
          out.residuals = r_trial;
          out.jacobian = j_trial;
          out.chi2 = chi2;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          if (step < settings.step_tol) {
            out.converged = true;
            ++out.iterations;
            return out;
          }
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No direction lowers chi2 any further at working precision.
      out.converged = true;
      return out;
    }
  }
  out.converged = max_cosine(out.jacobian, out.residuals) < settings.gradient_tol;
  return out;
}

void require_full_rank(const Eigen::MatrixXd& jacobian, const std::vector<std::string>& names) {
  const auto p = jacobian.cols();
  Eigen::VectorXd norms(p);
  for (Eigen::Index c = 0; c < p; ++c) norms(c) = jacobian.col(c).norm();
  Eigen::MatrixXd scaled = jacobian;
  for (Eigen::Index c = 0; c < p; ++c) {
    if (norms(c) > 0.0) scaled.col(c) /= norms(c);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() > 0 && s(s.size() - 1) > 1e-10 * s(0) && s(0) > 0.0) return;

  Eigen::VectorXd null = svd.matrixV().col(p - 1);
  for (Eigen::Index c = 0; c < p; ++c) {
    if (norms(c) > 0.0) null(c) /= norms(c);
  }
  null.normalize();
  std::vector<double> direction(null.data(), null.data() + null.size());
  std::string text;
  for (Eigen::Index c = 0; c < p; ++c) {
    if (!text.empty()) text += ", ";
    text += names[static_cast<std::size_t>(c)] + ": " + format_number(null(c));
  }
  throw DegenerateFitError("rank-deficient Jacobian; null direction {" + text + "}",
                           std::move(direction));
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& jacobian, double chi2) {
  const auto n = jacobian.rows();
  const auto p = jacobian.cols();
  const double dof = static_cast<double>(std::max<Eigen::Index>(1, n - p));
  const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
  const Eigen::MatrixXd inv = jtj.completeOrthogonalDecomposition().pseudoInverse();
  return inv * (chi2 / dof);
}

}  // namespace qaction::lsq
