#pragma once

// T -> infinity analytics. For large transition time the amplitude is
// dominated by the ground state, and the quantum action collapses to
//   2 m (V~(x) - V~_min) = hbar^2 (psi'(x) / psi(x))^2,   V~_min = E_gr,
// so the ground state fixes the combination U = 2m(V~ - V~_min) and nothing
// more. The classical potential and U are tied by
//   2m (V - E_gr) = U - (hbar / 2) U' / sqrt(U) sgn(x - x*),
// and exp(-int_{x*}^x sqrt(U) dx' / hbar) reproduces psi exactly.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qaction/model.hpp"
#include "qaction/propagator.hpp"
#include "qaction/report.hpp"

namespace qaction {

struct QuantumPotentialProfile {
  /// Window nodes where psi > floor * max psi.
  std::vector<double> x;
  /// U = hbar^2 (psi'/psi)^2 on the window.
  std::vector<double> U;
  /// -hbar psi'/psi; sqrt(U) carrying the sign of x - x*.
  std::vector<double> log_derivative;
  double v_min = 0.0;
  /// Zero of the log-derivative, linearly interpolated.
  double x_star = 0.0;
  double spacing = 0.0;
  /// Grid index of x.front().
  std::size_t first = 0;
};

/// Throws NotSingleWellError when psi has more than one maximum on the window.
QuantumPotentialProfile extract_quantum_potential(const GroundState& gs,
                                                  const PhysConstants& constants,
                                                  double floor = 1e-8);

struct TransformationLawCheck {
  std::vector<double> x;
  std::vector<double> residual;
  double max_abs = 0.0;
  double at = 0.0;
};

/// r(x) = 2m(V - E_gr) - [U - (hbar/2) U'/sqrt(U) sgn(x - x*)] on the window,
/// skipping |x - x*| < 3 dx and two nodes at each window edge (stencil), and
/// restricted to [x_lo, x_hi] when given.
TransformationLawCheck verify_transformation_law(const QuantumPotentialProfile& profile,
                                                 const ClassicalAction& classical, double E_gr,
                                                 const PhysConstants& constants,
                                                 double x_lo = -1e300, double x_hi = 1e300);

/// exp(-int_{x*}^x sqrt(U) / hbar) on the profile window, normalized so that
/// sum psi^2 dx = 1.
std::vector<double> wkb_ground_state(const QuantumPotentialProfile& profile,
                                     const PhysConstants& constants);

/// Ground state restricted to the profile window and renormalized there.
std::vector<double> window_samples(const GroundState& gs, const QuantumPotentialProfile& profile);

/// sqrt(sum (a - b)^2 dx).
double l2_distance(const std::vector<double>& a, const std::vector<double>& b, double dx);

void write_profile_csv(std::ostream& os, const QuantumPotentialProfile& profile);

// ---- hydrogen ------------------------------------------------------------------

/// Lowest state per angular momentum l (n = l + 1). V~_l(r) = mu / r^2 - nu / r.
struct HydrogenSectorResult {
  int l = 1;
  double mu = 0.0;
  double nu = 0.0;
  double E_l = 0.0;
  double r_star = 0.0;
  /// Bohr radius hbar^2 / (m e^2).
  double a0 = 1.0;
  /// -nu^2 / (4 mu), the minimum of V~_l; equals E_l.
  double v_min = 0.0;
  /// N_l with int_0^inf (N_l r^l e^{-r/((l+1) a0)})^2 r^2 dr = 1.
  double norm = 0.0;

  double potential(double r) const { return mu / (r * r) - nu / r; }
  /// phi_l(r) = N_l r^l exp(-r / ((l+1) a0)).
  double phi(double r) const;
};

/// Throws UnsupportedError for l = 0.
HydrogenSectorResult hydrogen_sector(int l, const PhysConstants& constants);

/// Radial grid for sector l: hard walls at r = 0 and r = 50 (l+1) a0.
GridSpec1D hydrogen_grid(int l, const PhysConstants& constants, std::size_t n_points = 2048);

/// u_l(r) = r phi_l(r): lowest eigenstate of the radial problem with
/// V_l = hbar^2 l(l+1) / (2 m r^2) - e^2 / r on the grid.
GroundState radial_ground_state(int l, const PhysConstants& constants, const GridSpec1D& grid);

/// phi = u / r on the same nodes (zero at r = 0), normalized by sum phi^2 dr = 1.
GroundState radial_to_phi(const GroundState& u);

KeyValueDocument hydrogen_document(const std::vector<HydrogenSectorResult>& sectors);

}  // namespace qaction
