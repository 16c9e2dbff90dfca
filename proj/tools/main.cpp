// qaction: command-line driver. Each command maps to one library pipeline and
// writes its artifacts into --out, every file headed by the config echo.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qaction/asymptotic.hpp"
#include "qaction/chaos.hpp"
#include "qaction/config.hpp"
#include "qaction/errors.hpp"
#include "qaction/fitter.hpp"
#include "qaction/instanton.hpp"
#include "qaction/parallel.hpp"
#include "qaction/propagator.hpp"

namespace {

using namespace qaction;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitDegenerate = 4;

class Artifacts {
 public:
  explicit Artifacts(const RunConfig& config) : config_(config), dir_(config.out) {
    std::filesystem::create_directories(dir_);
  }

  /// Opens dir/name with the config header already written.
  std::ofstream open(const std::string& name) const {
    const auto path = dir_ / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path.string() + "'");
    write_config_header(os, config_);
    std::cout << path.string() << '\n';
    return os;
  }

 private:
  const RunConfig& config_;
  std::filesystem::path dir_;
};

void require_1d(const RunConfig& c, const std::string& command) {
  if (c.action_kind != "polynomial") {
    throw ConfigError(command + " needs action.kind = polynomial");
  }
}

void require_2d(const RunConfig& c, const std::string& command) {
  if (c.action_kind != "quartic2d") throw ConfigError(command + " needs action.kind = quartic2d");
}

DecomposeOptions decompose_options(const RunConfig& c) {
  DecomposeOptions options;
  options.hbar = c.constants.hbar;
  return options;
}

Propagation2DOptions propagation_options(const RunConfig& c) {
  Propagation2DOptions options;
  options.hbar = c.constants.hbar;
  options.max_step_fraction = c.step_fraction_2d;
  return options;
}

AmplitudeTable2D table_2d(const RunConfig& c, double T, const WorkerPool& pool) {
  return amplitude_table_2d(c.action, c.grid2d, c.boundary2d, T, c.fit.floor,
                            propagation_options(c), &pool);
}

void cmd_amplitude(const RunConfig& c, const Artifacts& out, const WorkerPool& pool) {
  if (c.action_kind.empty()) throw ConfigError("amplitude needs an action definition");
  if (c.action_kind == "quartic2d") {
    const AmplitudeTable2D table = table_2d(c, c.T, pool);
    auto os = out.open("amplitude2d.csv");
    os << "x_i,y_i,x_f,y_f,T,G\n";
    for (std::size_t k = 0; k < table.size(); ++k) {
      const auto& p = table.pairs[k];
      os << format_number(p.initial.x) << ',' << format_number(p.initial.y) << ','
         << format_number(p.final.x) << ',' << format_number(p.final.y) << ','
         << format_number(table.transition_time) << ',' << format_number(table.values[k]) << '\n';
    }
    return;
  }
  const auto decomp = spectral_decompose(c.action, c.grid, 0, decompose_options(c));
  auto os = out.open("amplitude.csv");
  write_amplitude_csv(os, amplitude_table(decomp, c.boundary, c.T, c.fit.floor, &pool));
}

void cmd_ground_state(const RunConfig& c, const Artifacts& out) {
  require_1d(c, "ground-state");
  const GroundState gs = ground_state(spectral_decompose(c.action, c.grid, 1, decompose_options(c)));
  auto os = out.open("ground_state.csv");
  os << "# E_gr = " << format_number(gs.E_gr) << '\n';
  write_ground_state_csv(os, gs);
}

void cmd_fit(const RunConfig& c, const Artifacts& out, const WorkerPool& pool) {
  if (c.action_kind.empty()) throw ConfigError("fit needs an action definition");
  if (c.action_kind == "quartic2d") {
    auto ansatz = QuantumActionParams2D::from_classical(c.action, c.T);
    const FitResult2D fit = fit_quantum_action_2d(table_2d(c, c.T, pool), ansatz, c.fit2d, &pool);
    auto os = out.open("fit2d.txt");
    write_fit_result(os, fit);
    return;
  }
  const auto decomp = spectral_decompose(c.action, c.grid, 0, decompose_options(c));
  const AmplitudeTable table = amplitude_table(decomp, c.boundary, c.T, c.fit.floor, &pool);
  const FitResult fit =
      fit_quantum_action(table, QuantumActionParams1D::from_classical(c.action, c.T), c.fit, &pool);
  KeyValueDocument doc = to_document(fit);
  try {
    const DoubleWellShape shape = analyze_double_well(fit.params, c.instanton_tol, fit.uncertainties);
    doc.set("double_well.a_tilde", shape.a_tilde);
    doc.set("double_well.B_tilde", shape.B_tilde);
    doc.set("double_well.kappa", instanton_profile(shape, fit.params.m_tilde, 3).kappa);
  } catch (const NotDoubleWellError& e) {
    doc.set("double_well.absent", std::string(e.what()));
  }
  auto os = out.open("fit.txt");
  os << doc.canonical_text();
}

FamilyResult run_family(const RunConfig& c, const WorkerPool& pool) {
  require_1d(c, "fit-family");
  return fit_family(c.action, c.grid, c.T_list, c.fit, &pool);
}

void cmd_fit_family(const RunConfig& c, const Artifacts& out, const WorkerPool& pool) {
  const FamilyResult family = run_family(c, pool);
  auto os = out.open("fit_family.csv");
  if (family.stopped) os << "# stopped: " << *family.stopped << '\n';
  os << "T,m_tilde,v_tilde_0,v_tilde_1,v_tilde_2,v_tilde_3,v_tilde_4,ln_z,chi2,n_pairs,converged\n";
  for (const FitResult& f : family.fits) {
    os << format_number(f.params.transition_time.value_or(0.0)) << ','
       << format_number(f.params.m_tilde);
    for (double v : f.params.v_tilde) os << ',' << format_number(v);
    os << ',' << format_number(f.params.ln_z) << ',' << format_number(f.chi2) << ',' << f.n_pairs
       << ',' << (f.converged ? "true" : "false") << '\n';
  }
}

void cmd_qpotential(const RunConfig& c, const Artifacts& out) {
  require_1d(c, "qpotential");
  const GroundState gs = ground_state(spectral_decompose(c.action, c.grid, 1, decompose_options(c)));
  const auto profile = extract_quantum_potential(gs, c.constants, c.qpotential_floor);
  const auto law = verify_transformation_law(profile, c.action, gs.E_gr, c.constants);
  const auto wkb = wkb_ground_state(profile, c.constants);
  {
    auto os = out.open("qpotential.csv");
    write_profile_csv(os, profile);
  }
  KeyValueDocument doc;
  doc.set("qpotential.E_gr", gs.E_gr);
  doc.set("qpotential.x_star", profile.x_star);
  const auto peak = std::max_element(gs.psi.begin(), gs.psi.end()) - gs.psi.begin();
  doc.set("qpotential.argmax_psi", gs.grid.node(static_cast<std::size_t>(peak)));
  doc.set("qpotential.window_min", profile.x.front());
  doc.set("qpotential.window_max", profile.x.back());
  doc.set("qpotential.transformation_law.max_abs", law.max_abs);
  doc.set("qpotential.transformation_law.at", law.at);
  doc.set("qpotential.wkb_l2", l2_distance(wkb, window_samples(gs, profile), profile.spacing));
  auto os = out.open("qpotential.txt");
  os << doc.canonical_text();
}

void cmd_instanton(const RunConfig& c, const Artifacts& out, const WorkerPool& pool) {
  const FamilyResult fits = run_family(c, pool);
  const InstantonFamily family = instanton_family(fits.fits, c.instanton_tol);
  {
    auto os = out.open("instanton_family.csv");
    if (fits.stopped) os << "# stopped: " << *fits.stopped << '\n';
    write_family_csv(os, family);
  }
  KeyValueDocument doc;
  doc.set("instanton.a_tilde_non_increasing", family.a_tilde_non_increasing);
  doc.set("instanton.B_tilde_non_increasing", family.B_tilde_non_increasing);
  if (family.v2_sign_change) doc.set("instanton.v2_sign_change_T", *family.v2_sign_change);
  // The largest-T member with a double well stands in for the T -> infinity limit.
  const InstantonFamilyEntry* last = nullptr;
  for (const auto& e : family.entries) {
    if (e.shape) last = &e;
  }
  if (last) {
    doc.set("instanton.largest_T", last->T);
    doc.set("instanton.a_tilde", last->shape->a_tilde);
    doc.set("instanton.B_tilde", last->shape->B_tilde);
    doc.set("instanton.kappa", last->kappa);
    auto os = out.open("instanton_profile.csv");
    write_profile_csv(os, instanton_profile(*last->shape, last->m_tilde, c.instanton_samples));
  }
  auto os = out.open("instanton.txt");
  os << doc.canonical_text();
}

void cmd_poincare(const RunConfig& c, const Artifacts& out, const WorkerPool& pool) {
  require_2d(c, "poincare");
  SectionConfig section = c.chaos;
  section.params = QuantumActionParams2D::from_classical(c.action);
  if (c.chaos_action == "quantum") {
    auto ansatz = QuantumActionParams2D::from_classical(c.action, c.chaos_T);
    const FitResult2D fit =
        fit_quantum_action_2d(table_2d(c, c.chaos_T, pool), ansatz, c.fit2d, &pool);
    auto os = out.open("poincare_fit.txt");
    write_fit_result(os, fit);
    section.params = fit.params;
    section.params.cross_terms.reset();
  }
  auto os = out.open("poincare.csv");
  write_section_csv(os, poincare_section(section, &pool));
}

void cmd_hydrogen(const RunConfig& c, const Artifacts& out) {
  std::vector<HydrogenSectorResult> sectors;
  std::ostringstream table;
  table << "l,mu,nu,E_l,r_star,E_grid,argmax_phi,dr\n";
  for (int l = 1; l <= c.hydrogen_l_max; ++l) {
    const HydrogenSectorResult h = hydrogen_sector(l, c.constants);
    sectors.push_back(h);
    const GridSpec1D grid = hydrogen_grid(l, c.constants, c.hydrogen_points);
    const GroundState u = radial_ground_state(l, c.constants, grid);
    const GroundState phi = radial_to_phi(u);
    const auto peak = std::max_element(phi.psi.begin(), phi.psi.end()) - phi.psi.begin();
    table << l << ',' << format_number(h.mu) << ',' << format_number(h.nu) << ','
          << format_number(h.E_l) << ',' << format_number(h.r_star) << ','
          << format_number(u.E_gr) << ',' << format_number(grid.node(static_cast<std::size_t>(peak)))
          << ',' << format_number(grid.spacing()) << '\n';
  }
  {
    auto os = out.open("hydrogen.csv");
    os << table.str();
  }
  auto os = out.open("hydrogen.txt");
  os << hydrogen_document(sectors).canonical_text();
}

int run(const std::string& command, const RunConfig& config) {
  const Artifacts out(config);
  const WorkerPool pool(config.threads);
  if (command == "amplitude") cmd_amplitude(config, out, pool);
  else if (command == "ground-state") cmd_ground_state(config, out);
  else if (command == "fit") cmd_fit(config, out, pool);
  else if (command == "fit-family") cmd_fit_family(config, out, pool);
  else if (command == "qpotential") cmd_qpotential(config, out);
  else if (command == "instanton") cmd_instanton(config, out, pool);
  else if (command == "poincare") cmd_poincare(config, out, pool);
  else if (command == "hydrogen") cmd_hydrogen(config, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum action: amplitudes, fits, asymptotics, instantons and Poincare sections"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  long long threads = -1;
  long long seed = -1;
  app.add_option("command", command, "Pipeline to run")
      ->required()
      ->check(CLI::IsMember({"amplitude", "ground-state", "fit", "fit-family", "qpotential",
                             "instanton", "poincare", "hydrogen"}));
  app.add_option("--config", config_path, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "RNG seed for poincare seeding");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    KeyValueDocument doc;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      doc = KeyValueDocument::parse(is);
    }
    if (threads >= 0) doc.set("run.threads", std::to_string(threads));
    if (!out_dir.empty()) doc.set("run.out", out_dir);
    if (seed >= 0) {
      if (command != "poincare") throw ConfigError("--seed applies to poincare only");
      doc.set("chaos.seed", std::to_string(seed));
    }
    return run(command, parse_run_config(doc));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DegenerateFitError& e) {
    std::cerr << "degenerate fit: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const DegenerateTableError& e) {
    std::cerr << "degenerate table: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
