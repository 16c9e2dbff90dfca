#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "qaction/errors.hpp"
#include "qaction/linalg.hpp"
#include "qaction/report.hpp"
#include "qaction/trajectory.hpp"

namespace qaction {

std::array<double, kPotentialTerms2D> potential_basis_2d(Vec2 q) {
  const double x2 = q.x * q.x;
  const double y2 = q.y * q.y;
  return {1.0,
          x2 + y2,
          x2 * y2,
          x2 * x2 + y2 * y2,
          q.x * q.y,
          q.x * q.y * (x2 + y2),
          x2 * y2 * (x2 + y2),
          x2 * x2 * y2 * y2};
}

ExtendedAction2D ExtendedAction2D::from(const QuantumActionParams2D& params) {
  ExtendedAction2D e;
  e.m_tilde = params.m_tilde;
  e.a = {params.v_tilde_0, params.v_tilde_2, params.v_tilde_22, params.v_tilde_4};
  if (params.cross_terms) {
    const CrossTerms2D& c = *params.cross_terms;
    e.c_xdot_ydot = c.xdot_ydot;
    e.a[4] = c.xy;
    e.a[5] = c.xy3_x3y;
    e.a[6] = c.x2y4_x4y2;
    e.a[7] = c.x4y4;
  }
  return e;
}

double ExtendedAction2D::potential(Vec2 q) const {
  const auto f = potential_basis_2d(q);
  double v = 0.0;
  for (std::size_t j = 0; j < kPotentialTerms2D; ++j) v += a[j] * f[j];
  return v;
}

Vec2 ExtendedAction2D::gradient(Vec2 q) const {
  const double x = q.x, y = q.y;
  const double x2 = x * x, y2 = y * y;
  const double gx = a[1] * 2.0 * x + a[2] * 2.0 * x * y2 + a[3] * 4.0 * x2 * x + a[4] * y +
                    a[5] * (y2 * y + 3.0 * x2 * y) + a[6] * (2.0 * x * y2 * y2 + 4.0 * x2 * x * y2) +
                    a[7] * 4.0 * x2 * x * y2 * y2;
  const double gy = a[1] * 2.0 * y + a[2] * 2.0 * x2 * y + a[3] * 4.0 * y2 * y + a[4] * x +
                    a[5] * (3.0 * x * y2 + x2 * x) + a[6] * (4.0 * x2 * y2 * y + 2.0 * x2 * x2 * y) +
                    a[7] * 4.0 * x2 * x2 * y2 * y;
  return {gx, gy};
}

std::array<double, 3> ExtendedAction2D::hessian(Vec2 q) const {
  const double x = q.x, y = q.y;
  const double x2 = x * x, y2 = y * y;
  const double xx = a[1] * 2.0 + a[2] * 2.0 * y2 + a[3] * 12.0 * x2 + a[5] * 6.0 * x * y +
                    a[6] * (2.0 * y2 * y2 + 12.0 * x2 * y2) + a[7] * 12.0 * x2 * y2 * y2;
  const double xy = a[2] * 4.0 * x * y + a[4] + a[5] * 3.0 * (x2 + y2) +
                    a[6] * 8.0 * x * y * (x2 + y2) + a[7] * 16.0 * x2 * x * y2 * y;
  const double yy = a[1] * 2.0 + a[2] * 2.0 * x2 + a[3] * 12.0 * y2 + a[5] * 6.0 * x * y +
                    a[6] * (12.0 * x2 * y2 + 2.0 * x2 * x2) + a[7] * 12.0 * x2 * x2 * y2;
  return {xx, xy, yy};
}

namespace {

struct Relaxed2D {
  std::vector<Vec2> path;
  double sigma = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool minimum = false;
};

double sliced_action_2d(const ExtendedAction2D& e, const std::vector<Vec2>& q, double h) {
  const std::size_t n = q.size() - 1;
  double kinetic = 0.0;
  double cross = 0.0;
  double potential = 0.5 * (e.potential(q.front()) + e.potential(q.back()));
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = q[k + 1].x - q[k].x;
    const double dy = q[k + 1].y - q[k].y;
    kinetic += dx * dx + dy * dy;
    cross += dx * dy;
  }
  for (std::size_t k = 1; k < n; ++k) potential += e.potential(q[k]);
  return e.m_tilde / (2.0 * h) * kinetic + e.c_xdot_ydot / h * cross + h * potential;
}

/// Interleaved gradient (x_1, y_1, x_2, ...); returns max |g| / h.
double action_gradient_2d(const ExtendedAction2D& e, const std::vector<Vec2>& q, double h,
                          std::vector<double>& g) {
  const std::size_t n = q.size() - 1;
  g.assign(2 * (n - 1), 0.0);
  double worst = 0.0;
  const double m = e.m_tilde / h;
  const double c = e.c_xdot_ydot / h;
  for (std::size_t k = 1; k < n; ++k) {
    const double lx = 2.0 * q[k].x - q[k - 1].x - q[k + 1].x;
    const double ly = 2.0 * q[k].y - q[k - 1].y - q[k + 1].y;
    const Vec2 dv = e.gradient(q[k]);
    const double gx = m * lx + c * ly + h * dv.x;
    const double gy = m * ly + c * lx + h * dv.y;
    g[2 * (k - 1)] = gx;
    g[2 * (k - 1) + 1] = gy;
    worst = std::max({worst, std::abs(gx), std::abs(gy)});
  }
  return worst / h;
}

/// Residual level that round-off alone produces in action_gradient_2d.
double residual_floor_2d(const ExtendedAction2D& e, const std::vector<Vec2>& q, double h) {
  double x_max = 0.0, g_max = 0.0;
  for (const Vec2& v : q) {
    x_max = std::max({x_max, std::abs(v.x), std::abs(v.y)});
    const Vec2 g = e.gradient(v);
    g_max = std::max({g_max, std::abs(g.x), std::abs(g.y)});
  }
  const double kinetic = std::abs(e.m_tilde) + std::abs(e.c_xdot_ydot);
  return 4.0 * std::numeric_limits<double>::epsilon() * (kinetic * x_max / (h * h) + g_max);
}

Relaxed2D relax_2d(const ExtendedAction2D& e, std::vector<Vec2> q, double h, double tol,
                   std::size_t max_iter) {
  const std::size_t n = q.size() - 1;
  const std::size_t dim = 2 * (n - 1);
  constexpr std::size_t kd = 3;
  const double m = e.m_tilde / h;
  const double c = e.c_xdot_ydot / h;
  std::vector<double> g, band, step(dim);
  std::vector<Vec2> trial;
  Relaxed2D out;
  double sigma = sliced_action_2d(e, q, h);
  double residual = action_gradient_2d(e, q, h, g);

  auto at = [&](std::size_t i, std::size_t j) -> double& { return band[(i - j) + j * (kd + 1)]; };

  for (std::size_t iter = 0; iter <= max_iter && std::isfinite(residual); ++iter) {
    double shift = 0.0;
    bool positive = false;
    for (int attempt = 0; attempt < 80; ++attempt) {
      band.assign((kd + 1) * dim, 0.0);
      for (std::size_t k = 1; k < n; ++k) {
        const std::size_t i = 2 * (k - 1);
        const auto hs = e.hessian(q[k]);
        at(i, i) = 2.0 * m + h * hs[0] + shift;
        at(i + 1, i) = 2.0 * c + h * hs[1];
        at(i + 1, i + 1) = 2.0 * m + h * hs[2] + shift;
        if (k + 1 < n) {
          at(i + 2, i) = -m;
          at(i + 3, i) = -c;
          at(i + 2, i + 1) = -c;
          at(i + 3, i + 1) = -m;
        }
      }
      for (std::size_t i = 0; i < dim; ++i) step[i] = -g[i];
      if (linalg::solve_spd_banded(dim, kd, band, step)) {
        positive = true;
        break;
      }
      shift = shift == 0.0 ? 1e-6 * 2.0 * m : 4.0 * shift;
    }
    if (residual < std::max(tol, residual_floor_2d(e, q, h))) {
      out.converged = true;
      out.minimum = positive && shift == 0.0;
      break;
    }
    if (!positive || iter == max_iter) break;

    double slope = 0.0;
    for (std::size_t i = 0; i < dim; ++i) slope += g[i] * step[i];
    auto apply = [&](double alpha) {
      trial = q;
      for (std::size_t k = 1; k < n; ++k) {
        trial[k].x += alpha * step[2 * (k - 1)];
        trial[k].y += alpha * step[2 * (k - 1) + 1];
      }
    };
    double alpha = 1.0;
    bool accepted = false;
    const bool near_floor = -slope <= 1e-10 * std::max(1.0, std::abs(sigma));
    for (int halving = 0; halving < 40 && !near_floor; ++halving) {
      apply(alpha);
      const double s_trial = sliced_action_2d(e, trial, h);
      if (std::isfinite(s_trial) && s_trial <= sigma + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      apply(1.0);
      std::vector<double> g_trial;
      if (!(action_gradient_2d(e, trial, h, g_trial) < residual)) break;
    }
    q.swap(trial);
    sigma = sliced_action_2d(e, q, h);
    residual = action_gradient_2d(e, q, h, g);
  }
  out.sigma = sigma;
  out.residual = residual;
  out.path = std::move(q);
  return out;
}

std::vector<Vec2> resample(const std::vector<Vec2>& path, std::size_t n) {
  std::vector<Vec2> out(n + 1);
  const double src = static_cast<double>(path.size() - 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double u = src * static_cast<double>(k) / static_cast<double>(n);
    const auto j = std::min(static_cast<std::size_t>(u), path.size() - 2);
    const double f = u - static_cast<double>(j);
    out[k] = {path[j].x + f * (path[j + 1].x - path[j].x), path[j].y + f * (path[j + 1].y - path[j].y)};
  }
  return out;
}

bool same_path_2d(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double scale = 1.0;
  double diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    scale = std::max({scale, std::abs(a[k].x), std::abs(a[k].y)});
    diff = std::max({diff, std::abs(a[k].x - b[k].x), std::abs(a[k].y - b[k].y)});
  }
  return diff < 1e-5 * scale;
}

}  // namespace

Trajectory2D solve_euclidean_bvp_2d(const ExtendedAction2D& action, const BoundaryPair2D& boundary,
                                    std::size_t n_t, double tol, const std::vector<Vec2>* warm,
                                    const BvpOptions& options) {
  if (!(boundary.T > 0.0)) throw ArgumentError("boundary pair needs T > 0");
  if (!(action.m_tilde > 0.0)) throw ArgumentError("quantum mass must be positive");
  if (!(std::abs(action.c_xdot_ydot) < action.m_tilde)) {
    throw ArgumentError("kinetic term is not positive definite (|c| >= m)");
  }
  if (n_t < 64) throw ArgumentError("solve_euclidean_bvp_2d needs n_t >= 64");
  const double h = boundary.T / static_cast<double>(n_t);
  const Vec2 qi = boundary.initial;
  const Vec2 qf = boundary.final;

  std::vector<std::vector<Vec2>> guesses;
  if (warm != nullptr && warm->size() >= 2) {
    auto w = resample(*warm, n_t);
    w.front() = qi;
    w.back() = qf;
    guesses.push_back(std::move(w));
  }
  std::vector<Vec2> line(n_t + 1);
  for (std::size_t k = 0; k <= n_t; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n_t);
    line[k] = {qi.x + s * (qf.x - qi.x), qi.y + s * (qf.y - qi.y)};
  }
  guesses.push_back(line);
  if (options.multi_start && action.a[1] > 0.0) {
    // Valley path through the origin, the canonical minimum.
    const double tau = std::min(std::sqrt(action.m_tilde / (2.0 * action.a[1])), boundary.T / 4.0);
    std::vector<Vec2> valley(n_t + 1);
    for (std::size_t k = 0; k <= n_t; ++k) {
      const double t = h * static_cast<double>(k);
      const double a = std::exp(-t / tau);
      const double b = std::exp(-(boundary.T - t) / tau);
      valley[k] = {qi.x * a + qf.x * b, qi.y * a + qf.y * b};
    }
    valley.front() = qi;
    valley.back() = qf;
    guesses.push_back(std::move(valley));
  }

  std::vector<Relaxed2D> found;
  double best_residual = std::numeric_limits<double>::infinity();
  for (auto& guess : guesses) {
    Relaxed2D r = relax_2d(action, std::move(guess), h, tol, options.max_iter);
    best_residual = std::min(best_residual, r.residual);
    if (!r.converged) continue;
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Relaxed2D& f) {
      return same_path_2d(f.path, r.path);
    });
    if (!duplicate) found.push_back(std::move(r));
  }
  if (found.empty()) {
    throw SolverError("2-D boundary-value relaxation did not converge (best residual " +
                          format_number(best_residual) + ")",
                      best_residual);
  }
  const auto best = std::min_element(found.begin(), found.end(),
                                     [](const Relaxed2D& a, const Relaxed2D& b) { return a.sigma < b.sigma; });
  Trajectory2D out;
  out.path = best->path;
  out.sigma = best->sigma;
  out.residual = best->residual;
  out.distinct_minima = static_cast<std::size_t>(
      std::count_if(found.begin(), found.end(), [](const Relaxed2D& f) { return f.minimum; }));
  return out;
}

std::array<double, 2 + kPotentialTerms2D> action_sensitivity_2d(const std::vector<Vec2>& path,
                                                                 double T) {
  const std::size_t n = path.size() - 1;
  const double h = T / static_cast<double>(n);
  std::array<double, 2 + kPotentialTerms2D> g{};
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = path[k + 1].x - path[k].x;
    const double dy = path[k + 1].y - path[k].y;
    g[0] += (dx * dx + dy * dy) / (2.0 * h);
    g[1] += dx * dy / h;
  }
  for (std::size_t k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 * h : h;
    const auto f = potential_basis_2d(path[k]);
    for (std::size_t j = 0; j < kPotentialTerms2D; ++j) g[2 + j] += w * f[j];
  }
  return g;
}

// ---- real-time flow ----------------------------------------------------------

double hamiltonian(const QuantumActionParams2D& params, Vec2 q, Vec2 p) {
  return (p.x * p.x + p.y * p.y) / (2.0 * params.m_tilde) + params.potential(q);
}

LeapfrogFlow::LeapfrogFlow(const QuantumActionParams2D& params, const FlowSample& initial,
                           double dt)
    : potential_(params.canonical_potential()),
      mass_(params.m_tilde),
      dt_(dt),
      t0_(initial.t),
      state_(initial) {
  const Vec2 g = eval_gradient(PotentialSpec{potential_}, state_.q);
  force_ = {-g.x, -g.y};
  state_.energy = hamiltonian(params, state_.q, state_.p);
}

void LeapfrogFlow::step() {
  const double half = 0.5 * dt_;
  state_.p.x += half * force_.x;
  state_.p.y += half * force_.y;
  state_.q.x += dt_ * state_.p.x / mass_;
  state_.q.y += dt_ * state_.p.y / mass_;
  const PotentialSpec spec{potential_};
  const Vec2 g = eval_gradient(spec, state_.q);
  force_ = {-g.x, -g.y};
  state_.p.x += half * force_.x;
  state_.p.y += half * force_.y;
  ++steps_;
  state_.t = t0_ + dt_ * static_cast<double>(steps_);
  state_.energy = (state_.p.x * state_.p.x + state_.p.y * state_.p.y) / (2.0 * mass_) +
                  eval_potential(spec, state_.q);
}

std::vector<FlowSample> integrate_realtime(const QuantumActionParams2D& params,
                                           const FlowSample& initial, double t_max, double dt,
                                           std::size_t stride) {
  params.validate();
  if (!(dt > 0.0) || !(t_max >= 0.0)) throw ArgumentError("need dt > 0 and t_max >= 0");
  if (stride == 0) throw ArgumentError("sampling stride must be positive");
  if (params.v_tilde_2 > 0.0) {
    const double period = 2.0 * std::numbers::pi / std::sqrt(2.0 * params.v_tilde_2 / params.m_tilde);
    if (dt > 1e-3 * period) {
      throw ArgumentError("dt = " + format_number(dt) + " exceeds 1e-3 of the oscillation period " +
                          format_number(period));
    }
  }
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  LeapfrogFlow flow(params, initial, dt);
  const double e0 = flow.state().energy;
  const double scale = e0 != 0.0 ? std::abs(e0) : 1.0;
  std::vector<FlowSample> out{flow.state()};
  for (std::size_t s = 1; s <= steps; ++s) {
    flow.step();
    const double drift = std::abs(flow.state().energy - e0) / scale;
    if (!(drift <= kMaxEnergyDrift)) {
      throw IntegrationError("relative energy drift " + format_number(drift) + " at t = " +
                             format_number(flow.state().t) + "; reduce dt");
    }
    if (s % stride == 0 || s == steps) out.push_back(flow.state());
  }
  return out;
}

void write_flow_csv(std::ostream& os, const std::vector<FlowSample>& samples) {
  os << "t,x,y,px,py,H\n";
  for (const auto& s : samples) {
    os << format_number(s.t) << ',' << format_number(s.q.x) << ',' << format_number(s.q.y) << ','
       << format_number(s.p.x) << ',' << format_number(s.p.y) << ',' << format_number(s.energy)
       << '\n';
  }
}

}  // namespace qaction
