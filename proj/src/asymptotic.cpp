#include "qaction/asymptotic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

double five_point(const std::vector<double>& f, std::size_t k, double h) {
  return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

QuantumPotentialProfile extract_quantum_potential(const GroundState& gs,
                                                  const PhysConstants& constants, double floor) {
  constants.validate();
  const auto& psi = gs.psi;
  const std::size_t n = psi.size();
  if (n < 8) throw ArgumentError("ground state has too few samples");
  const auto peak = static_cast<std::size_t>(std::max_element(psi.begin(), psi.end()) - psi.begin());
  const double cut = floor * psi[peak];
  std::size_t first = peak;
  std::size_t last = peak;
  while (first > 2 && psi[first - 1] > cut) --first;
  while (last + 3 < n && psi[last + 1] > cut) ++last;

  QuantumPotentialProfile profile;
  const double h = gs.grid.spacing();
  profile.spacing = h;
  profile.first = first;
  profile.v_min = gs.E_gr;
  std::size_t crossings = 0;
  for (std::size_t k = first; k <= last; ++k) {
    const double w = -constants.hbar * five_point(psi, k, h) / psi[k];
    if (!profile.log_derivative.empty()) {
      const double prev = profile.log_derivative.back();
      if (prev > 0.0 && w <= 0.0) {
        throw NotSingleWellError("ground state has a second maximum near x = " +
                                 format_number(gs.grid.node(k)));
      }
      if (prev < 0.0 && w >= 0.0) {
        ++crossings;
        const double x0 = gs.grid.node(k - 1);
        profile.x_star = w == 0.0 ? gs.grid.node(k) : x0 + h * prev / (prev - w);
      }
    }
    profile.x.push_back(gs.grid.node(k));
    profile.log_derivative.push_back(w);
    profile.U.push_back(w * w);
  }
  if (crossings != 1) {
    throw NotSingleWellError("ground state has no interior maximum on the window");
  }
  return profile;
}

TransformationLawCheck verify_transformation_law(const QuantumPotentialProfile& profile,
                                                 const ClassicalAction& classical, double E_gr,
                                                 const PhysConstants& constants, double x_lo,
                                                 double x_hi) {
  const double h = profile.spacing;
  const auto& U = profile.U;
  TransformationLawCheck check;
  for (std::size_t k = 2; k + 2 < U.size(); ++k) {
    const double x = profile.x[k];
    if (x < x_lo || x > x_hi) continue;
    if (std::abs(x - profile.x_star) < 3.0 * h || U[k] <= 0.0) continue;
    const double lhs = 2.0 * classical.mass * (eval_potential(classical.potential, x) - E_gr);
    const double rhs = U[k] - 0.5 * constants.hbar * five_point(U, k, h) / std::sqrt(U[k]) *
                                  sign_of(x - profile.x_star);
    const double r = lhs - rhs;
    check.x.push_back(x);
    check.residual.push_back(r);
    if (std::abs(r) > check.max_abs) {
      check.max_abs = std::abs(r);
      check.at = x;
    }
  }
  return check;
}

std::vector<double> wkb_ground_state(const QuantumPotentialProfile& profile,
                                     const PhysConstants& constants) {
  const std::size_t n = profile.U.size();
  const double h = profile.spacing;
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = std::sqrt(profile.U[k]) * sign_of(profile.x[k] - profile.x_star);
  }
  // sqrt(U) sgn(x - x*) is smooth through x*, so the end-corrected trapezoid
  // (Euler-Maclaurin, O(h^4)) applies on every prefix.
  auto slope = [&](std::size_t k) {
    if (n < 3) return 0.0;
    if (k == 0) return (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h);
    if (k == n - 1) return (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * h);
    return (s[k + 1] - s[k - 1]) / (2.0 * h);
  };
  std::vector<double> integral(n, 0.0);
  double trapezoid = 0.0;
  const double start_slope = slope(0);
  for (std::size_t k = 1; k < n; ++k) {
    trapezoid += 0.5 * h * (s[k - 1] + s[k]);
    integral[k] = trapezoid - h * h / 12.0 * (slope(k) - start_slope);
  }
  const double lowest = n == 0 ? 0.0 : *std::min_element(integral.begin(), integral.end());
  std::vector<double> psi(n);
  double norm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    psi[k] = std::exp(-(integral[k] - lowest) / constants.hbar);
    norm += psi[k] * psi[k] * h;
  }
  const double scale = 1.0 / std::sqrt(norm);
  for (double& v : psi) v *= scale;
  return psi;
}

std::vector<double> window_samples(const GroundState& gs, const QuantumPotentialProfile& profile) {
  const double h = profile.spacing;
  std::vector<double> out(profile.x.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = gs.psi[profile.first + k];
    norm += out[k] * out[k] * h;
  }
  const double scale = 1.0 / std::sqrt(norm);
  for (double& v : out) v *= scale;
  return out;
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b, double dx) {
  if (a.size() != b.size()) throw ArgumentError("l2_distance needs equal-length samples");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sum * dx);
}

void write_profile_csv(std::ostream& os, const QuantumPotentialProfile& profile) {
  os << "x,U,Vmin\n";
  for (std::size_t k = 0; k < profile.x.size(); ++k) {
    os << format_number(profile.x[k]) << ',' << format_number(profile.U[k]) << ','
       << format_number(profile.v_min) << '\n';
  }
}

// ---- hydrogen ------------------------------------------------------------------

double HydrogenSectorResult::phi(double r) const {
  return norm * std::pow(r, l) * std::exp(-r / ((l + 1) * a0));
}

HydrogenSectorResult hydrogen_sector(int l, const PhysConstants& c) {
  c.validate();
  if (l == 0) {
    throw UnsupportedError("l = 0 has no centrifugal term; the quantum-action ansatz degenerates");
  }
  if (l < 0) throw ArgumentError("angular momentum must be non-negative");
  const double m = c.mass_default;
  const double lf = l;
  HydrogenSectorResult h;
  h.l = l;
  h.a0 = c.hbar * c.hbar / (m * c.charge_sq);
  h.mu = c.hbar * c.hbar * lf * lf / (2.0 * m);
  h.nu = c.charge_sq * lf / (lf + 1.0);
  h.E_l = -m * c.charge_sq * c.charge_sq / (2.0 * c.hbar * c.hbar * (lf + 1.0) * (lf + 1.0));
  h.r_star = 2.0 * h.mu / h.nu;
  h.v_min = -h.nu * h.nu / (4.0 * h.mu);
  // int r^(2l+2) e^(-b r) dr = (2l+2)! / b^(2l+3), b = 2 / ((l+1) a0).
  const double b = 2.0 / ((lf + 1.0) * h.a0);
  h.norm = std::exp(0.5 * ((2.0 * lf + 3.0) * std::log(b) - std::lgamma(2.0 * lf + 3.0)));
  return h;
}

GridSpec1D hydrogen_grid(int l, const PhysConstants& c, std::size_t n_points) {
  const double a0 = c.hbar * c.hbar / (c.mass_default * c.charge_sq);
  return {0.0, 50.0 * (l + 1) * a0, n_points};
}

GroundState radial_ground_state(int l, const PhysConstants& c, const GridSpec1D& grid) {
  c.validate();
  ClassicalAction action;
  action.mass = c.mass_default;
  action.potential = Radial{l, c.mass_default, c.charge_sq, c.hbar};
  DecomposeOptions options;
  options.hbar = c.hbar;
  return ground_state(spectral_decompose(action, grid, 1, options));
}

GroundState radial_to_phi(const GroundState& u) {
  GroundState phi = u;
  const double h = u.grid.spacing();
  double norm = 0.0;
  for (std::size_t k = 0; k < phi.psi.size(); ++k) {
    const double r = u.grid.node(k);
    phi.psi[k] = r > 0.0 ? u.psi[k] / r : 0.0;
    norm += phi.psi[k] * phi.psi[k] * h;
  }
  const double scale = 1.0 / std::sqrt(norm);
  for (double& v : phi.psi) v *= scale;
  return phi;
}

KeyValueDocument hydrogen_document(const std::vector<HydrogenSectorResult>& sectors) {
  KeyValueDocument doc;
  for (const auto& s : sectors) {
    const std::string prefix = "hydrogen.l" + std::to_string(s.l) + ".";
    doc.set(prefix + "mu", s.mu);
    doc.set(prefix + "nu", s.nu);
    doc.set(prefix + "E_l", s.E_l);
    doc.set(prefix + "r_star", s.r_star);
    doc.set(prefix + "v_min", s.v_min);
    doc.set(prefix + "norm", s.norm);
  }
  return doc;
}

}  // namespace qaction
