#pragma once

// Euclidean transition amplitudes G_E(x_f, T; x_i) = <x_f| exp(-H T / hbar) |x_i>.
//
// The 1-D Hamiltonian H = -(hbar^2 / 2m) d^2/dx^2 + V is discretized on a
// hard-wall box with the sine (particle-in-a-box) discrete variable
// representation: the kinetic operator is exact on the box eigenbasis up to
// the grid cutoff, and eigenfunctions are evaluated between nodes by their
// band-limited sine expansion. The 2-D kernel uses Strang-split imaginary-time
// propagation built from the same 1-D kinetic factor.

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "qaction/model.hpp"
#include "qaction/parallel.hpp"

namespace qaction {

/// Nodes x_k = x_min + k dx, k = 0..n_points-1, with hard walls at both ends.
struct GridSpec1D {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n_points = 1024;

  void validate() const;
  double spacing() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
  double node(std::size_t k) const { return x_min + spacing() * static_cast<double>(k); }
  double length() const { return x_max - x_min; }
  /// Interior unknowns (walls excluded).
  std::size_t interior() const { return n_points - 2; }
};

struct DecomposeOptions {
  double hbar = 1.0;
  /// Reject decompositions whose ground state touches the walls.
  bool require_confinement = true;
};

/// Sine-DVR kinetic matrix on the interior nodes (closed form).
Eigen::MatrixXd sine_dvr_kinetic(const GridSpec1D& grid, double mass, double hbar);

/// Box sine basis of a grid: the orthogonal transform S_{ik} = sqrt(2/N) sin(pi i k / N)
/// on interior indices and the continuum modes b_k(x) = sqrt(2/L) sin(k pi (x - x_min) / L).
class SineBasis {
 public:
  explicit SineBasis(const GridSpec1D& grid);

  const GridSpec1D& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& transform() const noexcept { return transform_; }
  /// b_k(x) for k = 1..N-1. Throws DomainError outside (x_min, x_max).
  Eigen::VectorXd modes(double x) const;
  /// Weights w with f(x) = w(x) . f_nodes for band-limited f; a unit vector on nodes.
  Eigen::VectorXd interpolation_weights(double x) const;

 private:
  GridSpec1D grid_;
  Eigen::MatrixXd transform_;
};

class SpectralDecomposition {
 public:
  SpectralDecomposition(GridSpec1D grid, ClassicalAction action, double hbar,
                        Eigen::VectorXd energies, Eigen::MatrixXd interior_vectors);

  const GridSpec1D& grid() const noexcept { return grid_; }
  const ClassicalAction& action() const noexcept { return action_; }
  double hbar() const noexcept { return hbar_; }
  std::size_t n_states() const noexcept { return static_cast<std::size_t>(energies_.size()); }
  const Eigen::VectorXd& energies() const noexcept { return energies_; }

  /// All eigenfunctions at x, normalized so that sum_k phi_n(x_k)^2 dx = 1.
  Eigen::VectorXd eigenfunctions_at(double x) const;
  /// Eigenfunction n on every node, walls included (zero there).
  std::vector<double> eigenfunction_on_grid(std::size_t n) const;
  /// Unit-norm interior eigenvector columns.
  const Eigen::MatrixXd& interior_vectors() const noexcept { return vectors_; }

 private:
  GridSpec1D grid_;
  ClassicalAction action_;
  double hbar_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd vectors_;
  SineBasis basis_;
  /// Mode coefficients S U; phi_n(x) = sum_k coeffs_(k, n) b_k(x).
  Eigen::MatrixXd coeffs_;
};

/// Lowest n_states eigenpairs (0 = all interior states). Throws BoxTooSmallError
/// when the ground state carries more than 1e-6 probability near a wall.
SpectralDecomposition spectral_decompose(const ClassicalAction& action, const GridSpec1D& grid,
                                         std::size_t n_states, const DecomposeOptions& options = {});

/// Spectral sum truncated once exp(-(E_n - E_0) T / hbar) < 1e-16.
double euclidean_amplitude(const SpectralDecomposition& decomp, double x_i, double x_f, double T);

struct AmplitudeTable {
  double transition_time = 0.0;
  /// Unordered pairs (x_i <= x_f in boundary-grid order).
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> values;
  double floor = 0.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// All unordered boundary pairs with G / max(G) > floor.
AmplitudeTable amplitude_table(const SpectralDecomposition& decomp,
                               std::span<const double> boundary_grid, double T, double floor,
                               const WorkerPool* pool = nullptr);

struct GroundState {
  GridSpec1D grid;
  double E_gr = 0.0;
  /// Samples on every node, zero on the walls.
  std::vector<double> psi;
};

GroundState ground_state(const SpectralDecomposition& decomp);

void write_amplitude_csv(std::ostream& os, const AmplitudeTable& table);
AmplitudeTable read_amplitude_csv(std::istream& is);
void write_ground_state_csv(std::ostream& os, const GroundState& gs);

// ---- 2-D -------------------------------------------------------------------

/// Square grid [min, max]^2 with n_points nodes per axis (walls included).
struct GridSpec2D {
  double min = -8.0;
  double max = 8.0;
  std::size_t n_points = 96;

  void validate() const;
  GridSpec1D axis() const { return {min, max, n_points}; }
};

struct PointPair2D {
  Vec2 initial;
  Vec2 final;
};

struct Propagation2DOptions {
  double hbar = 1.0;
  /// Time step as a fraction of T.
  double max_step_fraction = 1e-3;
};

/// G_E((x_f, y_f), T; (x_i, y_i)) for every pair. One propagation per distinct
/// source; on a symmetric box, sources are first mapped into 0 <= y <= x using
/// the reflection and exchange symmetries of Quartic2D.
std::vector<double> euclidean_amplitude_2d(const ClassicalAction& action, const GridSpec2D& grid,
                                           std::span<const PointPair2D> points, double T,
                                           const Propagation2DOptions& options = {},
                                           const WorkerPool* pool = nullptr);

struct AmplitudeTable2D {
  double transition_time = 0.0;
  std::vector<PointPair2D> pairs;
  std::vector<double> values;
  double floor = 0.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// All unordered pairs of boundary points with G / max(G) > floor.
AmplitudeTable2D amplitude_table_2d(const ClassicalAction& action, const GridSpec2D& grid,
                                    std::span<const Vec2> boundary_points, double T, double floor,
                                    const Propagation2DOptions& options = {},
                                    const WorkerPool* pool = nullptr);

}  // namespace qaction
