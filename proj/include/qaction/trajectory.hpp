#pragma once

// Classical paths of trial quantum actions.
//
// Euclidean convention, used everywhere: the path extremizes
//   S_E = int_0^T (m/2) xdot^2 + V(x) dt,
// so the equation of motion is m xddot = +V'(x) (motion in -V). Paths are
// found by damped Newton descent on the time-sliced action
//   S_n = sum_k (m / 2h) (x_{k+1} - x_k)^2 + h (V(x_k) + V(x_{k+1})) / 2,
// which is second-order accurate in h = T / n_t.
//
// The real-time part integrates H = |p|^2 / 2m + V(x, y) with kick-drift-kick
// leapfrog for the chaos module.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "qaction/model.hpp"

namespace qaction {

struct BoundaryPair {
  double x_i = 0.0;
  double x_f = 0.0;
  double T = 1.0;

  void validate() const;
};

struct BvpOptions {
  std::size_t max_iter = 200;
  /// Try valley-hugging initial paths through every local minimum (and pair of
  /// minima) in addition to the straight line.
  bool multi_start = true;
};

struct TrajectorySolution {
  std::vector<double> times;
  std::vector<double> path;
  /// Mean of V(x) - (m/2) xdot^2 over interior nodes (centered velocities,
  /// corrected for the O(h^2) slicing error).
  double epsilon = 0.0;
  /// Relative standard deviation of that estimate along the path.
  double epsilon_spread = 0.0;
  double sigma = 0.0;
  double residual = 0.0;
  /// Distinct converged local minima seen across the initial guesses.
  std::size_t distinct_minima = 1;

  std::size_t n_t() const noexcept { return path.empty() ? 0 : path.size() - 1; }
};

/// Smallest-action extremal with residual max |m xddot - V'| < tol, where tol is
/// raised to the round-off floor 4 eps (m max|x| / h^2 + max|V'|) for fine
/// slicings. Throws SolverError (carrying the best residual) when no initial
/// guess converges.
TrajectorySolution solve_euclidean_bvp(const QuantumActionParams1D& params,
                                       const BoundaryPair& boundary, std::size_t n_t, double tol,
                                       const BvpOptions& options = {});

/// Time-sliced Euclidean action of the path.
double action_value(const TrajectorySolution& trajectory, const QuantumActionParams1D& params);

/// dS_n / d(m, v_0..v_4) at a fixed path. At an extremal this is the total
/// derivative of the action value (the path response drops out).
struct ActionGradient1D {
  double m_tilde = 0.0;
  std::array<double, 5> v_tilde{};
};
ActionGradient1D action_sensitivity(const TrajectorySolution& trajectory,
                                    const QuantumActionParams1D& params);

/// Action and its parameter gradient, Richardson-extrapolated from n_t and
/// 2 n_t slices: (4 S_2n - S_n) / 3.
struct ActionEstimate {
  double sigma = 0.0;
  ActionGradient1D gradient;
  std::size_t distinct_minima = 1;
};
ActionEstimate extrapolated_action(const QuantumActionParams1D& params,
                                   const BoundaryPair& boundary, std::size_t n_t, double tol,
                                   const BvpOptions& options = {});

/// Real local minima of a degree <= 4 polynomial, ascending.
std::vector<double> polynomial_minima(const std::array<double, 5>& coeffs);

void write_trajectory_csv(std::ostream& os, const TrajectorySolution& trajectory);

// ---- 2-D Euclidean paths (extended action) ---------------------------------

/// Potential terms of the extended 2-D action, in coefficient order.
inline constexpr std::size_t kPotentialTerms2D = 8;
/// 1, x^2+y^2, x^2 y^2, x^4+y^4, xy, xy^3+x^3y, x^2y^4+x^4y^2, x^4y^4.
std::array<double, kPotentialTerms2D> potential_basis_2d(Vec2 q);

/// S = int (m/2)(xdot^2 + ydot^2) + c xdot ydot + sum_j a_j f_j(x, y) dt.
/// The canonical ansatz has c = 0 and a_4..a_7 = 0.
struct ExtendedAction2D {
  double m_tilde = 1.0;
  double c_xdot_ydot = 0.0;
  std::array<double, kPotentialTerms2D> a{};

  static ExtendedAction2D from(const QuantumActionParams2D& params);
  double potential(Vec2 q) const;
  Vec2 gradient(Vec2 q) const;
  /// (d2/dx2, d2/dxdy, d2/dy2).
  std::array<double, 3> hessian(Vec2 q) const;
};

struct BoundaryPair2D {
  Vec2 initial;
  Vec2 final;
  double T = 1.0;
};

struct Trajectory2D {
  std::vector<Vec2> path;
  double sigma = 0.0;
  double residual = 0.0;
  std::size_t distinct_minima = 1;
};

/// Smallest-action extremal among the straight line, the path through the
/// origin, and (when given) the warm-start path resampled to n_t.
Trajectory2D solve_euclidean_bvp_2d(const ExtendedAction2D& action, const BoundaryPair2D& boundary,
                                    std::size_t n_t, double tol, const std::vector<Vec2>* warm = nullptr,
                                    const BvpOptions& options = {});

/// dS_n / d(m, c, a_0..a_7) at a fixed path.
std::array<double, 2 + kPotentialTerms2D> action_sensitivity_2d(const std::vector<Vec2>& path,
                                                                 double T);

// ---- real-time flow ----------------------------------------------------------

struct FlowSample {
  double t = 0.0;
  Vec2 q;
  Vec2 p;
  double energy = 0.0;
};

double hamiltonian(const QuantumActionParams2D& params, Vec2 q, Vec2 p);

/// Kick-drift-kick leapfrog for H = |p|^2 / 2m + V(x, y) with the canonical
/// potential (cross terms are never used here).
class LeapfrogFlow {
 public:
  LeapfrogFlow(const QuantumActionParams2D& params, const FlowSample& initial, double dt);

  const FlowSample& state() const noexcept { return state_; }
  /// Acceleration at the current position, kept in sync after every step.
  Vec2 force() const noexcept { return force_; }
  void step();
  double mass() const noexcept { return mass_; }

 private:
  Quartic2D potential_;
  double mass_;
  double dt_;
  std::size_t steps_ = 0;
  double t0_;
  FlowSample state_;
  Vec2 force_;
};

/// Samples every `stride` steps, including t = 0 and the last step. Throws
/// IntegrationError when |H - H0| / |H0| exceeds 1e-6, ArgumentError when dt
/// exceeds 1e-3 of the small-oscillation period.
std::vector<FlowSample> integrate_realtime(const QuantumActionParams2D& params,
                                           const FlowSample& initial, double t_max, double dt,
                                           std::size_t stride = 1);

/// Relative energy drift allowed before integrate_realtime gives up.
inline constexpr double kMaxEnergyDrift = 1e-6;

void write_flow_csv(std::ostream& os, const std::vector<FlowSample>& samples);

}  // namespace qaction
