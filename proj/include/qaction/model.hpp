#pragma once

// Potentials, classical and quantum actions, and symmetry checks on fitted
// quantum-action coefficients.
//
// Units: hbar = m = 1 unless stated; the hydrogen sector uses atomic units
// (hbar = m = e = 1, so E_I = 1/2 and a_0 = 1).

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qaction {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct PhysConstants {
  double hbar = 1.0;
  double mass_default = 1.0;
  /// e^2 in energy * length; only the hydrogen sector reads it.
  double charge_sq = 1.0;

  /// Throws ArgumentError unless every field is positive.
  void validate() const;
};

/// V(x) = sum_k c_k x^k with degree K <= 4.
struct Polynomial1D {
  std::array<double, 5> coeffs{};
  int degree = 0;

  static Polynomial1D from(std::span<const double> c);
  /// Leading even coefficient positive, or pure harmonic (c4 = 0, c2 > 0, c3 = 0).
  bool confining() const;
};

/// V_l(r) = hbar^2 l(l+1) / (2 m r^2) - e^2 / r, defined for r > 0.
struct Radial {
  int l = 1;
  double electron_mass = 1.0;
  double charge_sq = 1.0;
  double hbar = 1.0;
};

/// V(x,y) = v0 + v2 (x^2 + y^2) + v22 x^2 y^2 + v4 (x^4 + y^4).
struct Quartic2D {
  double v0 = 0.0;
  double v2 = 0.0;
  double v22 = 0.0;
  double v4 = 0.0;
};

using PotentialSpec = std::variant<Polynomial1D, Radial, Quartic2D>;

bool is_two_dimensional(const PotentialSpec& potential);
bool is_radial(const PotentialSpec& potential);

/// Value at a 1-D or radial point. Throws DomainError (r <= 0) or
/// ArgumentError (2-D potential evaluated at a scalar).
double eval_potential(const PotentialSpec& potential, double point);
double eval_potential(const PotentialSpec& potential, Vec2 point);

double eval_gradient(const PotentialSpec& potential, double point);
Vec2 eval_gradient(const PotentialSpec& potential, Vec2 point);

/// Second derivative, 1-D and radial only.
double eval_curvature(const PotentialSpec& potential, double point);

struct ClassicalAction {
  double mass = 1.0;
  PotentialSpec potential;

  void validate() const;
};

/// Degree-4 quantum action S = int (m/2) xdot^2 + sum_k v_k x^k at transition time T.
struct QuantumActionParams1D {
  double m_tilde = 1.0;
  std::array<double, 5> v_tilde{};
  /// Imaginary transition time; empty means the asymptotic (T -> infinity) action.
  std::optional<double> transition_time;
  double ln_z = 0.0;

  static QuantumActionParams1D from_classical(const ClassicalAction& action,
                                              std::optional<double> transition_time = {});

  double potential(double x) const;
  double gradient(double x) const;
  double curvature(double x) const;
  void validate() const;
};

/// Coefficients of terms excluded from the canonical 2-D ansatz. Carried for
/// diagnostics only; the canonical action keeps them at zero.
struct CrossTerms2D {
  double xdot_ydot = 0.0;
  double xy = 0.0;
  double xy3_x3y = 0.0;
  double x2y4_x4y2 = 0.0;
  double x4y4 = 0.0;

  static constexpr std::size_t size = 5;
  static const std::array<const char*, size>& names();
  std::array<double, size> values() const;
  static CrossTerms2D from(const std::array<double, size>& v);
};

struct QuantumActionParams2D {
  double m_tilde = 1.0;
  double v_tilde_0 = 0.0;
  double v_tilde_2 = 0.0;
  double v_tilde_22 = 0.0;
  double v_tilde_4 = 0.0;
  std::optional<CrossTerms2D> cross_terms;
  std::optional<double> transition_time;
  double ln_z = 0.0;

  static QuantumActionParams2D from_classical(const ClassicalAction& action,
                                              std::optional<double> transition_time = {});

  /// Canonical potential (cross terms ignored).
  Quartic2D canonical_potential() const;
  double potential(Vec2 q) const;
  Vec2 gradient(Vec2 q) const;
  void validate() const;
};

struct Uncertainties1D {
  double m_tilde = 0.0;
  std::array<double, 5> v_tilde{};
  double ln_z = 0.0;
};

struct Uncertainties2D {
  double m_tilde = 0.0;
  double v_tilde_0 = 0.0;
  double v_tilde_2 = 0.0;
  double v_tilde_22 = 0.0;
  double v_tilde_4 = 0.0;
  CrossTerms2D cross_terms;
  double ln_z = 0.0;
};

struct SymmetryViolation {
  std::string coefficient;
  double value = 0.0;
  double bound = 0.0;
};

struct SymmetryReport {
  bool pass = true;
  std::vector<SymmetryViolation> violations;
};

/// Flags odd coefficients (v1, v3) whose magnitude exceeds max(tolerance, sigma).
SymmetryReport validate_symmetries(const QuantumActionParams1D& params,
                                   const Uncertainties1D& sigma, double tolerance);
/// Flags cross terms whose magnitude exceeds max(tolerance, sigma).
SymmetryReport validate_symmetries(const QuantumActionParams2D& params,
                                   const Uncertainties2D& sigma, double tolerance);

}  // namespace qaction
