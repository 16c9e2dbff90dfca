#pragma once

// Run configuration: flat "section.key = value" text. Every key except the
// action coefficients has a default; unknown keys are rejected. The echo is the
// full canonical document (defaults materialized) minus the run.* keys, so
// outputs do not depend on where they are written or on the worker count.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qaction/chaos.hpp"
#include "qaction/fitter.hpp"
#include "qaction/model.hpp"
#include "qaction/propagator.hpp"
#include "qaction/report.hpp"

namespace qaction {

struct RunConfig {
  std::size_t threads = 1;
  std::string out = ".";

  PhysConstants constants;
  /// "polynomial" (1-D), "quartic2d", or empty when the config defines no action.
  std::string action_kind;
  ClassicalAction action;

  GridSpec1D grid{-10.0, 10.0, 1024};
  GridSpec2D grid2d{-7.0, 7.0, 96};
  double step_fraction_2d = 1e-3;
  std::vector<double> boundary;
  std::vector<Vec2> boundary2d;

  double T = 0.5;
  std::vector<double> T_list;
  FitConfig fit;
  FitConfig2D fit2d;

  double qpotential_floor = 1e-8;
  double instanton_tol = 1e-3;
  std::size_t instanton_samples = 1001;

  /// "quantum" fits the 2-D action at chaos_T first; "classical" uses the action as is.
  std::string chaos_action = "quantum";
  double chaos_T = 4.5;
  SectionConfig chaos;

  int hydrogen_l_max = 4;
  std::size_t hydrogen_points = 2048;

  /// Canonical document without run.* keys.
  const KeyValueDocument& echo() const noexcept { return echo_; }
  std::string hash() const;

 private:
  friend RunConfig parse_run_config(const KeyValueDocument& doc);
  KeyValueDocument echo_;
};

/// Throws ConfigError on unknown keys, malformed values or out-of-range fields.
RunConfig parse_run_config(const KeyValueDocument& doc);
RunConfig load_run_config(const std::string& path);

/// "# key = value" lines of the echo followed by "# config_hash = ...".
void write_config_header(std::ostream& os, const RunConfig& config);
/// Inverse of write_config_header: reads the leading '#' lines of an artifact.
KeyValueDocument read_config_header(std::istream& is);

}  // namespace qaction
