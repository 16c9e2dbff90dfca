#include "qaction/instanton.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qaction/errors.hpp"
#include "qaction/report.hpp"
#include "qaction/trajectory.hpp"

namespace qaction {

double DoubleWellShape::potential(double x) const {
  const double d = x * x - a_tilde * a_tilde;
  return A_tilde * A_tilde * d * d;
}

double DoubleWellShape::gradient(double x) const {
  return 4.0 * A_tilde * A_tilde * x * (x * x - a_tilde * a_tilde);
}

DoubleWellShape analyze_double_well(const QuantumActionParams1D& params, double tol,
                                    const Uncertainties1D& sigma) {
  const auto& v = params.v_tilde;
  if (!(v[4] > 0.0)) throw NotDoubleWellError("v4 = " + format_number(v[4]) + " is not positive");
  if (!(v[2] < 0.0)) {
    throw NotDoubleWellError("v2 = " + format_number(v[2]) + " is not negative: single well");
  }
  DoubleWellShape shape;
  shape.a_tilde = std::sqrt(-v[2] / (2.0 * v[4]));
  shape.A_tilde = std::sqrt(v[4]);
  shape.B_tilde = v[2] * v[2] / (4.0 * v[4]);
  shape.offset = shape.B_tilde - v[0];

  // V(a) - V(-a) = 2 (v1 a + v3 a^3); the even part is degenerate by construction.
  const double a = shape.a_tilde;
  const double split = 2.0 * (v[1] * a + v[3] * a * a * a);
  const double bound =
      2.0 * (std::max(tol, sigma.v_tilde[1]) * a + std::max(tol, sigma.v_tilde[3]) * a * a * a);
  if (std::abs(split) > bound) {
    throw NotDoubleWellError("vacua not degenerate: V(a) - V(-a) = " + format_number(split));
  }
  return shape;
}

double InstantonProfile::at(double t) const { return a_tilde * std::tanh(kappa * t); }

InstantonProfile instanton_profile(const DoubleWellShape& shape, double m_tilde,
                                   std::size_t n_samples) {
  if (!(m_tilde > 0.0)) throw ArgumentError("m_tilde must be positive");
  if (n_samples < 2) throw ArgumentError("need at least two samples");
  InstantonProfile p;
  p.a_tilde = shape.a_tilde;
  p.m_tilde = m_tilde;
  p.kappa = std::sqrt(2.0 / m_tilde) * shape.A_tilde * shape.a_tilde;
  const double half = 5.0 / p.kappa;
  p.times.resize(n_samples);
  p.x.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    // Symmetric sampling so that x(-t) = -x(t) holds bit for bit.
    const double s = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    const std::size_t mirror = n_samples - 1 - i;
    const double t = i <= mirror ? s * half : -p.times[mirror];
    p.times[i] = t;
    p.x[i] = i <= mirror ? p.at(t) : -p.x[mirror];
    const double th = std::tanh(p.kappa * t);
    const double xddot = -2.0 * p.a_tilde * p.kappa * p.kappa * th * (1.0 - th * th);
    p.eom_residual = std::max(p.eom_residual, std::abs(m_tilde * xddot - shape.gradient(p.x[i])));
  }
  return p;
}

InstantonFamily instanton_family(const std::vector<FitResult>& fits, double tol) {
  InstantonFamily family;
  const InstantonFamilyEntry* previous = nullptr;
  for (const FitResult& fit : fits) {
    InstantonFamilyEntry entry;
    entry.T = fit.params.transition_time.value_or(0.0);
    entry.m_tilde = fit.params.m_tilde;
    if (!family.v2_sign_change && !(fit.params.v_tilde[2] < 0.0)) family.v2_sign_change = entry.T;
    try {
      const DoubleWellShape shape = analyze_double_well(fit.params, tol, fit.uncertainties);
      entry.shape = shape;
      entry.kappa = std::sqrt(2.0 / entry.m_tilde) * shape.A_tilde * shape.a_tilde;
    } catch (const NotDoubleWellError& e) {
      entry.reason = e.what();
    }
    family.entries.push_back(entry);
    const InstantonFamilyEntry& current = family.entries.back();
    if (current.shape) {
      if (previous) {
        if (current.shape->a_tilde > previous->shape->a_tilde) family.a_tilde_non_increasing = false;
        if (current.shape->B_tilde > previous->shape->B_tilde) family.B_tilde_non_increasing = false;
      }
      previous = &current;
    }
  }
  return family;
}

InstantonBvpCheck instanton_bvp_check(const QuantumActionParams1D& params,
                                      const DoubleWellShape& shape, std::size_t n_t,
                                      double window) {
  const double kappa = std::sqrt(2.0 / params.m_tilde) * shape.A_tilde * shape.a_tilde;
  const double T = 10.0 / kappa;
  const double a = shape.a_tilde;
  const TrajectorySolution sol =
      solve_euclidean_bvp(params, {-0.99 * a, 0.99 * a, T}, n_t, 1e-10);
  // The fixed ends sit inside +-a, so the kink's position is not pinned to T/2
  // (the centred path is a saddle); align on the zero crossing instead.
  double t0 = 0.5 * T;
  for (std::size_t i = 1; i < sol.times.size(); ++i) {
    if (sol.path[i - 1] < 0.0 && sol.path[i] >= 0.0) {
      const double h = sol.times[i] - sol.times[i - 1];
      t0 = sol.times[i - 1] + h * sol.path[i - 1] / (sol.path[i - 1] - sol.path[i]);
      break;
    }
  }
  InstantonBvpCheck check;
  check.center = t0;
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    const double s = sol.times[i] - t0;
    const double diff = std::abs(sol.path[i] - a * std::tanh(kappa * s));
    check.sup_full = std::max(check.sup_full, diff);
    if (std::abs(s) <= window / kappa) check.sup_core = std::max(check.sup_core, diff);
  }
  return check;
}

void write_family_csv(std::ostream& os, const InstantonFamily& family) {
  for (const auto& e : family.entries) {
    if (!e.shape) os << "# absent T=" << format_number(e.T) << ": " << e.reason << '\n';
  }
  os << "T,a_tilde,B_tilde,kappa,m_tilde\n";
  for (const auto& e : family.entries) {
    os << format_number(e.T) << ',';
    if (e.shape) {
      os << format_number(e.shape->a_tilde) << ',' << format_number(e.shape->B_tilde) << ','
         << format_number(e.kappa);
    } else {
      os << ",,";
    }
    os << ',' << format_number(e.m_tilde) << '\n';
  }
}

void write_profile_csv(std::ostream& os, const InstantonProfile& profile) {
  os << "t,x\n";
  for (std::size_t i = 0; i < profile.times.size(); ++i) {
    os << format_number(profile.times[i]) << ',' << format_number(profile.x[i]) << '\n';
  }
}

}  // namespace qaction
