#pragma once

// Poincare sections of H = |p|^2 / 2m + V(x, y) on the plane y = 0 with
// ydot > 0, plotted as (x, p_x). The real-time Hamiltonian reuses the
// Euclidean-fitted m and canonical potential; v0 only shifts the energy
// scale and is dropped by default so that E keeps its classical meaning.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qaction/model.hpp"
#include "qaction/parallel.hpp"
#include "qaction/report.hpp"
#include "qaction/trajectory.hpp"

namespace qaction {

struct SectionConfig {
  QuantumActionParams2D params;
  double energy = 10.0;
  std::size_t n_seeds = 16;
  std::uint64_t seed = 1;
  double t_max = 1e3;
  double dt = 1e-3;
  bool subtract_v0 = true;

  /// Parameters actually integrated (v0 removed when subtract_v0).
  QuantumActionParams2D flow_params() const;
  void validate() const;
};

/// States on y = 0 with p_y > 0 and H = E. Throws EnergyTooLowError when the
/// allowed interval on the x axis is empty.
std::vector<FlowSample> seed_energy_shell(const QuantumActionParams2D& params, double energy,
                                          std::size_t n, std::uint64_t seed);

struct SectionPoint {
  double x = 0.0;
  double px = 0.0;
  double energy = 0.0;
};

struct SectionTrajectory {
  std::vector<SectionPoint> points;
  /// Set when the energy drift limit aborted this trajectory.
  bool aborted = false;
  std::string reason;
};

struct PoincareSection {
  std::vector<SectionTrajectory> trajectories;
  SectionConfig config;

  std::size_t n_points() const;
  /// max |H - E| / |E| over all recorded crossings.
  double max_energy_error() const;
};

/// Seeds from seed_energy_shell(config.flow_params(), ...).
PoincareSection poincare_section(const SectionConfig& config, const WorkerPool* pool = nullptr);

/// Same for caller-provided initial states.
PoincareSection poincare_section(const SectionConfig& config,
                                 const std::vector<FlowSample>& initial,
                                 const WorkerPool* pool = nullptr);

KeyValueDocument to_document(const SectionConfig& config);
void write_section_csv(std::ostream& os, const PoincareSection& section);

}  // namespace qaction
