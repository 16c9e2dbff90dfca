#include "qaction/trajectory.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qaction/errors.hpp"
#include "qaction/linalg.hpp"
#include "qaction/report.hpp"

namespace qaction {

namespace {

struct Relaxed {
  std::vector<double> path;
  double sigma = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool minimum = false;
};

double sliced_action(const QuantumActionParams1D& p, const std::vector<double>& x, double h) {
  const std::size_t n = x.size() - 1;
  double kinetic = 0.0;
  double potential = 0.5 * (p.potential(x.front()) + p.potential(x.back()));
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = x[k + 1] - x[k];
    kinetic += dx * dx;
  }
  for (std::size_t k = 1; k < n; ++k) potential += p.potential(x[k]);
  return p.m_tilde / (2.0 * h) * kinetic + h * potential;
}

/// Gradient of the sliced action over interior nodes; returns max |g| / h.
double action_gradient(const QuantumActionParams1D& p, const std::vector<double>& x, double h,
                       std::vector<double>& g) {
  const std::size_t n = x.size() - 1;
  g.assign(n - 1, 0.0);
  double worst = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    g[k - 1] = p.m_tilde / h * (2.0 * x[k] - x[k - 1] - x[k + 1]) + h * p.gradient(x[k]);
    worst = std::max(worst, std::abs(g[k - 1]));
  }
  return worst / h;
}

/// Residual level that round-off alone produces in action_gradient.
double residual_floor(const QuantumActionParams1D& p, const std::vector<double>& x, double h) {
  double x_max = 0.0, g_max = 0.0;
  for (double v : x) {
    x_max = std::max(x_max, std::abs(v));
    g_max = std::max(g_max, std::abs(p.gradient(v)));
  }
  return 4.0 * std::numeric_limits<double>::epsilon() * (p.m_tilde * x_max / (h * h) + g_max);
}

Relaxed relax(const QuantumActionParams1D& p, std::vector<double> x, double h, double tol,
              std::size_t max_iter) {
  const std::size_t n = x.size() - 1;
  const double stiff = 2.0 * p.m_tilde / h;
  std::vector<double> g, diag(n - 1), off(n - 2, -p.m_tilde / h), step(n - 1), trial;
  Relaxed out;
  double sigma = sliced_action(p, x, h);
  double residual = action_gradient(p, x, h, g);

  for (std::size_t iter = 0; iter <= max_iter && std::isfinite(residual); ++iter) {
    for (std::size_t k = 1; k < n; ++k) diag[k - 1] = stiff + h * p.curvature(x[k]);
    // Unshifted factorization succeeds exactly when the Hessian is positive definite.
    double shift = 0.0;
    bool positive = false;
    for (int attempt = 0; attempt < 80; ++attempt) {
      for (std::size_t k = 0; k + 1 < n; ++k) step[k] = -g[k];
      if (linalg::solve_spd_tridiagonal(diag, off, shift, step)) {
        positive = true;
        break;
      }
      shift = shift == 0.0 ? 1e-6 * stiff : 4.0 * shift;
    }
    const bool is_minimum = positive && shift == 0.0;
    if (residual < std::max(tol, residual_floor(p, x, h))) {
      out.converged = true;
      out.minimum = is_minimum;
      break;
    }
    if (!positive || iter == max_iter) break;

    double slope = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) slope += g[k] * step[k];
    double alpha = 1.0;
    bool accepted = false;
    trial = x;
    // Below the round-off level of the action the sufficient-decrease test is
    // noise; the full Newton step is then taken unconditionally.
    const bool near_floor = -slope <= 1e-10 * std::max(1.0, std::abs(sigma));
    for (int halving = 0; halving < 40 && !near_floor; ++halving) {
      for (std::size_t k = 1; k < n; ++k) trial[k] = x[k] + alpha * step[k - 1];
      const double s_trial = sliced_action(p, trial, h);
      if (std::isfinite(s_trial) && s_trial <= sigma + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      for (std::size_t k = 1; k < n; ++k) trial[k] = x[k] + step[k - 1];
      std::vector<double> g_trial;
      if (!(action_gradient(p, trial, h, g_trial) < residual)) break;
    }
    x.swap(trial);
    sigma = sliced_action(p, x, h);
    residual = action_gradient(p, x, h, g);
  }
  out.sigma = sigma;
  out.residual = residual;
  out.path = std::move(x);
  return out;
}

std::vector<double> straight_line(const BoundaryPair& b, std::size_t n) {
  std::vector<double> x(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n);
    x[k] = b.x_i + s * (b.x_f - b.x_i);
  }
  return x;
}

/// base(t) with exponential boundary layers that pin x(0) = x_i, x(T) = x_f.
template <class Base>
std::vector<double> layered(const BoundaryPair& b, std::size_t n, double tau, Base base) {
  std::vector<double> x(n + 1);
  const double b0 = base(0.0);
  const double b1 = base(b.T);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = b.T * static_cast<double>(k) / static_cast<double>(n);
    x[k] = base(t) + (b.x_i - b0) * std::exp(-t / tau) + (b.x_f - b1) * std::exp(-(b.T - t) / tau);
  }
  x.front() = b.x_i;
  x.back() = b.x_f;
  return x;
}

std::vector<std::vector<double>> initial_guesses(const QuantumActionParams1D& p,
                                                 const BoundaryPair& b, std::size_t n,
                                                 bool multi_start) {
  std::vector<std::vector<double>> guesses{straight_line(b, n)};
  if (!multi_start) return guesses;
  const std::vector<double> minima = polynomial_minima(p.v_tilde);
  auto relaxation_time = [&](double c) {
    const double curvature = std::max(p.curvature(c), 1e-12);
    return std::min(std::sqrt(p.m_tilde / curvature), b.T / 4.0);
  };
  for (double c : minima) {
    guesses.push_back(layered(b, n, relaxation_time(c), [c](double) { return c; }));
  }
  for (double c1 : minima) {
    for (double c2 : minima) {
      if (c1 == c2) continue;
      const double tau = 0.5 * (relaxation_time(c1) + relaxation_time(c2));
      const double mid = 0.5 * b.T;
      guesses.push_back(layered(b, n, tau, [=](double t) {
        return c1 + (c2 - c1) * 0.5 * (1.0 + std::tanh((t - mid) / tau));
      }));
    }
  }
  return guesses;
}

bool same_path(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 1.0;
  double diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    scale = std::max(scale, std::abs(a[k]));
    diff = std::max(diff, std::abs(a[k] - b[k]));
  }
  return diff < 1e-5 * scale;
}

void fill_solution(TrajectorySolution& s, const QuantumActionParams1D& p, double T) {
  const std::size_t n = s.path.size() - 1;
  const double h = T / static_cast<double>(n);
  s.times.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) s.times[k] = h * static_cast<double>(k);
  // The sliced path follows m (xddot + h^2 x''''/12) = V' to O(h^4), whose
  // conserved energy, with v the centered difference, is the expression below.
  const double m = p.m_tilde;
  std::vector<double> e(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const double x = s.path[k];
    const double v = (s.path[k + 1] - s.path[k - 1]) / (2.0 * h);
    const double g = p.gradient(x);
    e[k - 1] = p.potential(x) - 0.5 * m * v * v +
               h * h * (p.curvature(x) * v * v / 12.0 + g * g / (24.0 * m));
  }
  const double count = static_cast<double>(n - 1);
  double sum = 0.0;
  for (double v : e) sum += v;
  s.epsilon = sum / count;
  double sum_sq = 0.0;
  for (double v : e) sum_sq += (v - s.epsilon) * (v - s.epsilon);
  const double sd = std::sqrt(sum_sq / count);
  s.epsilon_spread = s.epsilon != 0.0 ? sd / std::abs(s.epsilon) : sd;
}

}  // namespace

void BoundaryPair::validate() const {
  if (!(T > 0.0)) throw ArgumentError("boundary pair needs T > 0");
  if (!std::isfinite(x_i) || !std::isfinite(x_f)) throw ArgumentError("non-finite boundary point");
}

std::vector<double> polynomial_minima(const std::array<double, 5>& c) {
  // V'(x) = d0 + d1 x + d2 x^2 + d3 x^3.
  std::array<double, 4> d{c[1], 2.0 * c[2], 3.0 * c[3], 4.0 * c[4]};
  double scale = 0.0;
  for (double v : d) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return {};
  int degree = 3;
  while (degree > 0 && std::abs(d[static_cast<std::size_t>(degree)]) <= 1e-14 * scale) --degree;
  if (degree == 0) return {};

  std::vector<double> roots;
  if (degree == 1) {
    roots.push_back(-d[0] / d[1]);
  } else {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < degree; ++i) {
      companion(i, degree - 1) = -d[static_cast<std::size_t>(i)] / d[static_cast<std::size_t>(degree)];
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    for (const auto& z : solver.eigenvalues()) {
      if (std::abs(z.imag()) <= 1e-7 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
    }
  }
  auto slope = [&](double x) { return ((d[3] * x + d[2]) * x + d[1]) * x + d[0]; };
  auto curvature = [&](double x) { return (3.0 * d[3] * x + 2.0 * d[2]) * x + d[1]; };
  std::vector<double> minima;
  for (double r : roots) {
    for (int it = 0; it < 3; ++it) {
      const double c2 = curvature(r);
      if (c2 == 0.0) break;
      r -= slope(r) / c2;
    }
    if (curvature(r) > 0.0) minima.push_back(r);
  }
  std::sort(minima.begin(), minima.end());
  minima.erase(std::unique(minima.begin(), minima.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9 * (1.0 + std::abs(a)); }),
               minima.end());
  return minima;
}

TrajectorySolution solve_euclidean_bvp(const QuantumActionParams1D& params,
                                       const BoundaryPair& boundary, std::size_t n_t, double tol,
                                       const BvpOptions& options) {
  boundary.validate();
  params.validate();
  if (n_t < 64) throw ArgumentError("solve_euclidean_bvp needs n_t >= 64");
  if (!(tol > 0.0)) throw ArgumentError("solver tolerance must be positive");
  const double h = boundary.T / static_cast<double>(n_t);

  std::vector<Relaxed> found;
  double best_residual = std::numeric_limits<double>::infinity();
  for (auto& guess : initial_guesses(params, boundary, n_t, options.multi_start)) {
    Relaxed r = relax(params, std::move(guess), h, tol, options.max_iter);
    best_residual = std::min(best_residual, r.residual);
    if (!r.converged) continue;
    const bool duplicate = std::any_of(found.begin(), found.end(),
                                       [&](const Relaxed& f) { return same_path(f.path, r.path); });
    if (!duplicate) found.push_back(std::move(r));
  }
  if (found.empty()) {
    throw SolverError("boundary-value relaxation did not converge (best residual " +
                      format_number(best_residual) + ")",
                      best_residual);
  }
  const auto best = std::min_element(found.begin(), found.end(), [](const Relaxed& a, const Relaxed& b) {
    return a.sigma < b.sigma;
  });
  TrajectorySolution s;
  s.path = best->path;
  s.sigma = best->sigma;
  s.residual = best->residual;
  s.distinct_minima = static_cast<std::size_t>(
      std::count_if(found.begin(), found.end(), [](const Relaxed& f) { return f.minimum; }));
  fill_solution(s, params, boundary.T);
  return s;
}

double action_value(const TrajectorySolution& trajectory, const QuantumActionParams1D& params) {
  const double T = trajectory.times.back() - trajectory.times.front();
  return sliced_action(params, trajectory.path, T / static_cast<double>(trajectory.n_t()));
}

ActionGradient1D action_sensitivity(const TrajectorySolution& trajectory,
                                    const QuantumActionParams1D&) {
  const auto& x = trajectory.path;
  const std::size_t n = trajectory.n_t();
  const double h = (trajectory.times.back() - trajectory.times.front()) / static_cast<double>(n);
  ActionGradient1D g;
  double kinetic = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = x[k + 1] - x[k];
    kinetic += dx * dx;
  }
  g.m_tilde = kinetic / (2.0 * h);
  for (std::size_t k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 * h : h;
    double power = 1.0;
    for (std::size_t j = 0; j < 5; ++j) {
      g.v_tilde[j] += w * power;
      power *= x[k];
    }
  }
  return g;
}

ActionEstimate extrapolated_action(const QuantumActionParams1D& params,
                                   const BoundaryPair& boundary, std::size_t n_t, double tol,
                                   const BvpOptions& options) {
  const TrajectorySolution coarse = solve_euclidean_bvp(params, boundary, n_t, tol, options);

  // Refine the same branch: start from the coarse path, linearly interpolated.
  std::vector<double> fine_guess(2 * n_t + 1);
  for (std::size_t k = 0; k <= n_t; ++k) fine_guess[2 * k] = coarse.path[k];
  for (std::size_t k = 0; k < n_t; ++k) {
    fine_guess[2 * k + 1] = 0.5 * (coarse.path[k] + coarse.path[k + 1]);
  }
  const double h_fine = boundary.T / static_cast<double>(2 * n_t);
  Relaxed fine = relax(params, std::move(fine_guess), h_fine, tol, options.max_iter);
  if (!fine.converged) {
    throw SolverError("refined boundary-value relaxation did not converge (residual " +
                      format_number(fine.residual) + ")",
                      fine.residual);
  }
  TrajectorySolution fine_solution;
  fine_solution.path = std::move(fine.path);
  fine_solution.sigma = fine.sigma;
  fill_solution(fine_solution, params, boundary.T);

  const ActionGradient1D gc = action_sensitivity(coarse, params);
  const ActionGradient1D gf = action_sensitivity(fine_solution, params);
  ActionEstimate e;
  e.sigma = (4.0 * fine_solution.sigma - coarse.sigma) / 3.0;
  e.gradient.m_tilde = (4.0 * gf.m_tilde - gc.m_tilde) / 3.0;
  for (std::size_t j = 0; j < 5; ++j) {
    e.gradient.v_tilde[j] = (4.0 * gf.v_tilde[j] - gc.v_tilde[j]) / 3.0;
  }
  e.distinct_minima = coarse.distinct_minima;
  return e;
}

void write_trajectory_csv(std::ostream& os, const TrajectorySolution& trajectory) {
  os << "t,x\n";
  for (std::size_t k = 0; k < trajectory.path.size(); ++k) {
    os << format_number(trajectory.times[k]) << ',' << format_number(trajectory.path[k]) << '\n';
  }
}

}  // namespace qaction
