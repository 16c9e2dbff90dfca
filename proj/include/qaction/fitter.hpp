#pragma once

// Fits of the quantum action: parameters (m, v_k) and normalization ln Z such
// that  ln G_E(x_f, T; x_i) = ln Z - S(x_i, x_f; params) / hbar  over a table
// of Euclidean amplitudes, with S the action of the classical path of the
// trial action (Richardson-extrapolated time slicing).
//
// Normalization. A constant potential shift v_0 -> v_0 + c changes every
// action by c T, exactly like ln Z -> ln Z - c T / hbar, so (v_0, ln Z) cannot
// both be free. Two gauges are offered:
//   FreeParticle (default): ln Z = (d/2) ln(m / (2 pi hbar T)), the prefactor of
//     the free kernel in d dimensions; v_0 is fitted.
//   Free: ln Z is fitted (eliminated in closed form at each step) and v_0 is
//     held at its ansatz value.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qaction/least_squares.hpp"
#include "qaction/model.hpp"
#include "qaction/parallel.hpp"
#include "qaction/propagator.hpp"
#include "qaction/report.hpp"

namespace qaction {

enum class Normalization { FreeParticle, Free };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& text);

struct FitConfig {
  /// Boundary points used to build tables (fit_family); fit_quantum_action
  /// takes the table as given.
  std::vector<double> boundary_grid;
  double floor = 1e-10;
  /// Per-pair weights in table order; empty means uniform.
  std::vector<double> weights;
  lsq::Settings optimizer;
  std::size_t n_t = 64;
  /// Initial paths per boundary pair: 1 = straight line only, more adds the
  /// valley-hugging guesses.
  std::size_t multi_start = 4;
  double bvp_tol = 1e-9;
  double hbar = 1.0;
  Normalization normalization = Normalization::FreeParticle;

  void validate() const;
};

struct FitResult {
  QuantumActionParams1D params;
  Uncertainties1D uncertainties;
  double chi2 = 0.0;
  std::size_t n_pairs = 0;
  bool converged = false;
  std::size_t iterations = 0;
  Normalization normalization = Normalization::FreeParticle;
  /// Largest number of distinct extremals seen for any pair at the optimum.
  std::size_t max_extremals = 1;
};

/// Throws DegenerateTableError when the table has fewer than 3 pairs per free
/// parameter, DegenerateFitError on a rank-deficient Jacobian.
FitResult fit_quantum_action(const AmplitudeTable& table, const QuantumActionParams1D& ansatz,
                             const FitConfig& config, const WorkerPool* pool = nullptr);

/// chi2 of fixed parameters (ln Z taken from params) against a table.
double evaluate_chi2(const AmplitudeTable& table, const QuantumActionParams1D& params,
                     const FitConfig& config, const WorkerPool* pool = nullptr);

/// Per-pair residuals ln G - (ln Z - S / hbar), in table order.
std::vector<double> fit_residuals(const AmplitudeTable& table, const QuantumActionParams1D& params,
                                  const FitConfig& config, const WorkerPool* pool = nullptr);

struct FamilyResult {
  std::vector<FitResult> fits;
  /// Set when a degenerate table ended the sweep early.
  std::optional<std::string> stopped;
};

/// Sequential fits over ascending T, each warm-started from the previous optimum.
FamilyResult fit_family(const ClassicalAction& action, const GridSpec1D& grid,
                        const std::vector<double>& T_list, const FitConfig& config,
                        const WorkerPool* pool = nullptr);

KeyValueDocument to_document(const FitResult& fit);
FitResult fit_from_document(const KeyValueDocument& doc);
void write_fit_result(std::ostream& os, const FitResult& fit);

// ---- 2-D ---------------------------------------------------------------------

struct FitConfig2D {
  std::vector<Vec2> boundary_points;
  double floor = 1e-10;
  std::vector<double> weights;
  lsq::Settings optimizer;
  std::size_t n_t = 64;
  double bvp_tol = 1e-9;
  double hbar = 1.0;
  Normalization normalization = Normalization::FreeParticle;
  /// Also fit the excluded terms (xdot ydot, xy, xy^3+x^3y, x^2y^4+x^4y^2, x^4y^4).
  bool cross_terms = false;

  void validate() const;
};

struct FitResult2D {
  QuantumActionParams2D params;
  Uncertainties2D uncertainties;
  double chi2 = 0.0;
  std::size_t n_pairs = 0;
  bool converged = false;
  std::size_t iterations = 0;
  Normalization normalization = Normalization::FreeParticle;
};

FitResult2D fit_quantum_action_2d(const AmplitudeTable2D& table,
                                  const QuantumActionParams2D& ansatz, const FitConfig2D& config,
                                  const WorkerPool* pool = nullptr);

KeyValueDocument to_document(const FitResult2D& fit);
void write_fit_result(std::ostream& os, const FitResult2D& fit);

/// ln of the d-dimensional free-particle prefactor (m / (2 pi hbar T))^(d/2).
double free_particle_ln_z(double mass, double hbar, double T, int dimensions);

}  // namespace qaction
