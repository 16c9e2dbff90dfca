#pragma once

// Double-well geometry of a fitted quartic action and its instanton.
// With v4 > 0 and v2 < 0 the even part of the potential is
//   V(x) + offset = A^2 (x^2 - a^2)^2,  a^2 = -v2 / (2 v4),  A^2 = v4,
// barrier B = v2^2 / (4 v4), and the Euclidean kink is a tanh(kappa t) with
// kappa = sqrt(2/m) A a.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qaction/fitter.hpp"
#include "qaction/model.hpp"

namespace qaction {

struct DoubleWellShape {
  double a_tilde = 0.0;
  double A_tilde = 0.0;
  double B_tilde = 0.0;
  double offset = 0.0;

  /// A^2 (x^2 - a^2)^2.
  double potential(double x) const;
  double gradient(double x) const;
};

/// Throws NotDoubleWellError when v4 <= 0, v2 >= 0, or the odd coefficients
/// break the degeneracy V(a) = V(-a) beyond max(tol, sigma).
DoubleWellShape analyze_double_well(const QuantumActionParams1D& params, double tol,
                                    const Uncertainties1D& sigma = {});

struct InstantonProfile {
  double a_tilde = 0.0;
  double kappa = 0.0;
  double m_tilde = 1.0;
  std::vector<double> times;
  std::vector<double> x;
  /// max |m xddot - V'(x)| over the samples, xddot taken analytically.
  double eom_residual = 0.0;

  double at(double t) const;
};

/// Samples on t in [-5/kappa, 5/kappa].
InstantonProfile instanton_profile(const DoubleWellShape& shape, double m_tilde,
                                   std::size_t n_samples = 1001);

struct InstantonFamilyEntry {
  double T = 0.0;
  double m_tilde = 0.0;
  std::optional<DoubleWellShape> shape;
  double kappa = 0.0;
  /// Why shape extraction failed.
  std::string reason;
};

struct InstantonFamily {
  std::vector<InstantonFamilyEntry> entries;
  /// Diagnostics over consecutive present entries; reported, not enforced.
  bool a_tilde_non_increasing = true;
  bool B_tilde_non_increasing = true;
  /// First T at which v2 is no longer negative, if any.
  std::optional<double> v2_sign_change;
};

InstantonFamily instanton_family(const std::vector<FitResult>& fits, double tol);

/// Relaxes the trial action between -0.99 a and 0.99 a over T = 10 / kappa
/// and compares with a tanh(kappa (t - t0)), t0 the zero crossing of the path.
struct InstantonBvpCheck {
  double center = 0.0;
  /// sup |x_bvp - x_tanh| for |t - t0| <= window / kappa.
  double sup_core = 0.0;
  /// Same over the full interval, where the fixed ends pull the path off the kink.
  double sup_full = 0.0;
};

InstantonBvpCheck instanton_bvp_check(const QuantumActionParams1D& params,
                                      const DoubleWellShape& shape, std::size_t n_t = 400,
                                      double window = 3.0);

void write_family_csv(std::ostream& os, const InstantonFamily& family);
void write_profile_csv(std::ostream& os, const InstantonProfile& profile);

}  // namespace qaction
