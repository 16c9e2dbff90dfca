// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//
//   acceptance <qaction binary> <configs dir> <scratch dir>
//
// Exit status is the number of failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qaction/asymptotic.hpp"
#include "qaction/chaos.hpp"
#include "qaction/errors.hpp"
#include "qaction/fitter.hpp"
#include "qaction/instanton.hpp"

using namespace qaction;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances -------------------------------------------------------

constexpr double kC1Coefficient = 1e-3;
constexpr double kC1ChiPerPair = 1e-8;
constexpr double kC2Relative = 1e-4;
constexpr double kC3Relative = 0.03;
constexpr double kC3OddAbsolute = 0.01;
constexpr double kC3Derived = 0.01;
constexpr double kC4Relative = 0.02;
constexpr double kC5Exact = 4 * std::numeric_limits<double>::epsilon();
constexpr double kC5Energy = 1e-4;
constexpr double kC6L2 = 1e-3;
constexpr double kC6Law = 1e-3;
constexpr double kC7Containment = 1e-6;
constexpr double kC7Variance = 1e-10;
constexpr double kC7CrossTerm = 1e-3;
constexpr double kC7V22Classical = 0.05;

// Runtime limits in seconds.
constexpr double kLimitC1 = 60, kLimitC2 = 60, kLimitC3 = 600, kLimitC5 = 120, kLimitC6 = 120,
                 kLimitC7 = 900;

// Quoted double-well fit at T = 0.5 and its uncertainties (last digits).
struct Quoted {
  const char* name;
  double value;
  double sigma;
};
constexpr Quoted kReferenceFit[] = {{"m_tilde", 0.9961, 0.0002},
                                {"v_tilde_0", 1.5710, 0.0017},
                                {"v_tilde_2", -0.745, 0.006},
                                {"v_tilde_4", 0.493, 0.003}};
constexpr double kReferenceA = 0.869, kReferenceB = 0.281, kReferenceKappa = 0.865;

// ---- reporting ---------------------------------------------------------------

int failures = 0;

struct Line {
  std::string id;
  std::string title;
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { details.push_back("info " + what); }
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

void run(const std::string& id, const std::string& title, double limit,
         const std::function<void(Line&)>& body) {
  Line line{id, title, true, {}};
  const auto start = std::chrono::steady_clock::now();
  try {
    body(line);
  } catch (const std::exception& e) {
    line.require(false, std::string("exception: ") + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit > 0) line.require(seconds < limit, "runtime " + fmt(seconds, 3) + " s < " + fmt(limit) + " s");
  if (!line.pass) ++failures;
  std::printf("[%s] %s %s\n", line.pass ? "PASS" : "FAIL", id.c_str(), title.c_str());
  for (const auto& d : line.details) std::printf("       %s\n", d.c_str());
  std::fflush(stdout);
}

// ---- shared setup --------------------------------------------------------------

ClassicalAction polynomial(std::initializer_list<double> c) {
  ClassicalAction a;
  std::vector<double> v(c);
  a.potential = Polynomial1D::from(v);
  return a;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

const GridSpec1D kGrid{-10.0, 10.0, 1024};
const std::vector<double> kBoundary = linspace(-2.0, 2.0, 21);

double relative(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

// ---- criteria --------------------------------------------------------------------

void harmonic_identity(Line& line) {
  const auto action = polynomial({0, 0, 0.5});
  const auto decomp = spectral_decompose(action, kGrid, 0);
  for (double T : {0.5, 1.0, 2.0}) {
    const auto table = amplitude_table(decomp, kBoundary, T, 1e-10);
    // Free ln Z: the normalization absorbs the kernel prefactor, v0 stays at
    // its classical value (the pair (v0, ln Z) is degenerate).
    FitConfig config;
    config.normalization = Normalization::Free;
    QuantumActionParams1D start;
    start.m_tilde = 1.1;
    start.v_tilde = {0.0, 0.02, 0.4, -0.01, 0.05};
    start.transition_time = T;
    const FitResult fit = fit_quantum_action(table, start, config);
    double worst = std::abs(fit.params.m_tilde - 1.0);
    const double expected[] = {0.0, 0.0, 0.5, 0.0, 0.0};
    for (std::size_t k = 0; k < 5; ++k) {
      worst = std::max(worst, std::abs(fit.params.v_tilde[k] - expected[k]));
    }
    const double per_pair = fit.chi2 / static_cast<double>(fit.n_pairs);
    line.require(fit.converged && worst <= kC1Coefficient,
                 "T=" + fmt(T) + ": max |m-1|, |v_k - v_k^cl| (k=0..4) = " + fmt(worst, 3) + " <= " +
                     fmt(kC1Coefficient));
    line.require(per_pair < kC1ChiPerPair,
                 "T=" + fmt(T) + ": chi2/pair = " + fmt(per_pair, 3) + " < " + fmt(kC1ChiPerPair));
    const double mehler_ln_z = 0.5 * std::log(1.0 / (2.0 * std::numbers::pi * std::sinh(T)));
    line.info("T=" + fmt(T) + ": v0 held at 0; ln Z = " + fmt(fit.params.ln_z, 10) +
              ", harmonic prefactor " + fmt(mehler_ln_z, 10));
    const FitResult fp = fit_quantum_action(table, start, FitConfig{});
    line.info("T=" + fmt(T) + ": free-particle ln Z gives v0 = " + fmt(fp.params.v_tilde[0], 8) +
              " = ln(sinh T / T) / 2T = " + fmt(std::log(std::sinh(T) / T) / (2 * T), 8));
  }
}

void propagator_oracles(Line& line) {
  // First 200 unordered pairs of a 20-point grid on the fit window [-2, 2]. Wider
  // separations at T = 0.5 push G below the round-off of the spectral sum.
  const auto points = linspace(-2.0, 2.0, 20);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < points.size() && pairs.size() < 200; ++i) {
    for (std::size_t j = i; j < points.size() && pairs.size() < 200; ++j) {
      pairs.emplace_back(points[i], points[j]);
    }
  }
  DecomposeOptions open;
  open.require_confinement = false;
  const auto free = spectral_decompose(polynomial({0.0}), {-40.0, 40.0, 1024}, 0, open);
  const auto ho = spectral_decompose(polynomial({0, 0, 0.5}), kGrid, 0);
  for (double T : {0.5, 1.0}) {
    double worst_free = 0.0, worst_ho = 0.0;
    for (const auto& [a, b] : pairs) {
      const double g0 = std::exp(-(b - a) * (b - a) / (2 * T)) / std::sqrt(2 * std::numbers::pi * T);
      worst_free = std::max(worst_free, relative(euclidean_amplitude(free, a, b, T), g0));
      worst_ho = std::max(worst_ho, relative(euclidean_amplitude(ho, a, b, T),
                                             test::mehler_kernel(a, b, T)));
    }
    line.require(worst_free < kC2Relative, "free particle, T=" + fmt(T) + ", " +
                                               std::to_string(pairs.size()) + " pairs: max rel = " +
                                               fmt(worst_free, 3));
    line.require(worst_ho < kC2Relative, "harmonic, T=" + fmt(T) + ", " + std::to_string(pairs.size()) +
                                             " pairs: max rel = " + fmt(worst_ho, 3));
  }
}

void double_well_reproduction(Line& line) {
  const auto action = polynomial({0.5, 0, -1, 0, 0.5});
  const double T = 0.5;
  const auto decomp = spectral_decompose(action, kGrid, 0);
  const auto table = amplitude_table(decomp, kBoundary, T, 1e-10);
  const FitResult fit =
      fit_quantum_action(table, QuantumActionParams1D::from_classical(action, T), FitConfig{});
  const double fitted[] = {fit.params.m_tilde, fit.params.v_tilde[0], fit.params.v_tilde[2],
                           fit.params.v_tilde[4]};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& q = kReferenceFit[k];
    const double allowed = std::max(kC3Relative * std::abs(q.value), 5 * q.sigma);
    line.require(std::abs(fitted[k] - q.value) <= allowed,
                 std::string(q.name) + " = " + fmt(fitted[k]) + " vs " + fmt(q.value) +
                     " (allowed +-" + fmt(allowed, 3) + ")");
  }
  for (std::size_t k : {1u, 3u}) {
    line.require(std::abs(fit.params.v_tilde[k]) <= kC3OddAbsolute,
                 "v_tilde_" + std::to_string(k) + " = " + fmt(fit.params.v_tilde[k], 3));
  }
  const auto shape = analyze_double_well(fit.params, 1e-3, fit.uncertainties);
  const auto profile = instanton_profile(shape, fit.params.m_tilde);
  line.require(std::abs(shape.a_tilde - kReferenceA) <= kC3Derived,
               "a_tilde = " + fmt(shape.a_tilde) + " vs " + fmt(kReferenceA));
  line.require(std::abs(shape.B_tilde - kReferenceB) <= kC3Derived,
               "B_tilde = " + fmt(shape.B_tilde) + " vs " + fmt(kReferenceB));
  line.require(std::abs(profile.kappa - kReferenceKappa) <= kC3Derived,
               "kappa = " + fmt(profile.kappa) + " vs " + fmt(kReferenceKappa));
  line.info("chi2/pair = " + fmt(fit.chi2 / static_cast<double>(fit.n_pairs), 3) + " over " +
            std::to_string(fit.n_pairs) + " pairs, free-particle ln Z");
  line.info("v0 offset to the quoted value = " + fmt(kReferenceFit[1].value - fit.params.v_tilde[0]) +
            "; ln(pi) / 2T = " + fmt(std::log(std::numbers::pi) / (2 * T)) +
            " (a different constant in Z absorbs into v0)");
  const auto bvp = instanton_bvp_check(fit.params, shape);
  line.info("relaxed kink vs a tanh(kappa t): sup " + fmt(bvp.sup_core, 3) + " within 3/kappa, " +
            fmt(bvp.sup_full, 3) + " over [0, 10/kappa]");
}

void classical_limit(Line& line) {
  const auto action = polynomial({0.5, 0, -1, 0, 0.5});
  const double T = 0.05;
  const auto decomp = spectral_decompose(action, kGrid, 0);
  const auto table = amplitude_table(decomp, kBoundary, T, 1e-10);
  const FitResult fit =
      fit_quantum_action(table, QuantumActionParams1D::from_classical(action, T), FitConfig{});
  const double classical[] = {0.5, 0.0, -1.0, 0.0, 0.5};
  line.require(relative(fit.params.m_tilde, 1.0) <= kC4Relative,
               "m_tilde = " + fmt(fit.params.m_tilde) + " vs 1");
  for (std::size_t k = 0; k < 5; ++k) {
    const double v = fit.params.v_tilde[k];
    const double c = classical[k];
    // Vanishing coefficients are compared on the unit coefficient scale.
    const double deviation = c != 0.0 ? relative(v, c) : std::abs(v);
    line.require(deviation <= kC4Relative, "v_tilde_" + std::to_string(k) + " = " + fmt(v) + " vs " +
                                               fmt(c) + " (deviation " + fmt(100 * deviation, 3) + "%)");
  }
  // First-order small-T shift of the effective potential: (hbar T / 12 m) V''.
  line.info("predicted shift hbar T V'' / 12m: v0 " + fmt(0.5 + T * (-1.0) / 6.0) + ", v2 " +
            fmt(-1.0 + T * 0.5) + "; fitted v0 " + fmt(fit.params.v_tilde[0]) + ", v2 " +
            fmt(fit.params.v_tilde[2]));
}

void hydrogen_sectors(Line& line) {
  const PhysConstants c;
  for (int l = 1; l <= 4; ++l) {
    const auto s = hydrogen_sector(l, c);
    const double n = l + 1.0;
    const double E = -1.0 / (2.0 * n * n);
    const double mu = l * l / 2.0;
    const double nu = l / n;
    const bool exact = std::abs(s.E_l - E) <= kC5Exact * std::abs(E) &&
                       std::abs(s.mu - mu) <= kC5Exact * mu && std::abs(s.nu - nu) <= kC5Exact * nu &&
                       std::abs(s.v_min - E) <= kC5Exact * std::abs(E);
    line.require(exact, "l=" + std::to_string(l) + ": mu = " + fmt(s.mu, 17) + ", nu = " +
                            fmt(s.nu, 17) + ", E_l = " + fmt(s.E_l, 17));
    const auto grid = hydrogen_grid(l, c);
    const auto u = radial_ground_state(l, c, grid);
    line.require(std::abs(u.E_gr - E) < kC5Energy,
                 "l=" + std::to_string(l) + ": grid E = " + fmt(u.E_gr, 10) + " (error " +
                     fmt(std::abs(u.E_gr - E), 3) + ")");
    const auto phi = radial_to_phi(u);
    const auto peak = static_cast<std::size_t>(
        std::distance(phi.psi.begin(), std::max_element(phi.psi.begin(), phi.psi.end())));
    const double r_peak = grid.node(peak);
    const double r_expected = l * (l + 1.0);
    line.require(std::abs(r_peak - r_expected) <= grid.spacing(),
                 "l=" + std::to_string(l) + ": argmax phi = " + fmt(r_peak) + " vs l(l+1) a0 = " +
                     fmt(r_expected) + " (dr = " + fmt(grid.spacing(), 3) + ")");
  }
}

void asymptotic_analytics(Line& line) {
  const PhysConstants c;
  {
    const auto action = polynomial({0, 0, 0.5});
    const auto gs = ground_state(spectral_decompose(action, kGrid, 1));
    const auto profile = extract_quantum_potential(gs, c);
    const double l2 = l2_distance(wkb_ground_state(profile, c), window_samples(gs, profile), profile.spacing);
    line.require(l2 < kC6L2, "harmonic: WKB L2 = " + fmt(l2, 3));
    const auto law = verify_transformation_law(profile, action, gs.E_gr, c);
    line.require(law.max_abs < kC6Law, "harmonic: transformation-law residual = " + fmt(law.max_abs, 3) +
                                           " over the window [" + fmt(profile.x.front(), 4) + ", " +
                                           fmt(profile.x.back(), 4) + "]");
    const auto peak = std::max_element(gs.psi.begin(), gs.psi.end()) - gs.psi.begin();
    const double x_peak = gs.grid.node(static_cast<std::size_t>(peak));
    line.require(std::abs(x_peak - profile.x_star) <= gs.grid.spacing(),
                 "harmonic: argmax psi = " + fmt(x_peak, 4) + ", argmin V~ = " + fmt(profile.x_star, 4));
  }
  for (int l = 1; l <= 4; ++l) {
    const auto grid = hydrogen_grid(l, c);
    const auto u = radial_ground_state(l, c, grid);
    const auto profile = extract_quantum_potential(u, c);
    const std::string tag = "hydrogen l=" + std::to_string(l) + ": ";
    const double l2 = l2_distance(wkb_ground_state(profile, c), window_samples(u, profile), profile.spacing);
    line.require(l2 < kC6L2, tag + "WKB L2 = " + fmt(l2, 3));
    ClassicalAction radial;
    radial.potential = Radial{l, c.mass_default, c.charge_sq, c.hbar};
    const double r_star = l * (l + 1.0);
    // Guard: the 1/r^2 core, where 5-point differences of u cannot follow U ~ l^2 / r^2.
    const auto law = verify_transformation_law(profile, radial, u.E_gr, c, r_star / 2);
    line.require(law.max_abs < kC6Law, tag + "transformation-law residual = " + fmt(law.max_abs, 3) +
                                           " on r >= r*/2 = " + fmt(r_star / 2));
    const auto whole = verify_transformation_law(profile, radial, u.E_gr, c);
    line.info(tag + "over the whole window " + fmt(whole.max_abs, 3) + " (worst at r = " +
              fmt(whole.at, 3) + ")");
    const auto peak = std::max_element(u.psi.begin(), u.psi.end()) - u.psi.begin();
    const double r_peak = grid.node(static_cast<std::size_t>(peak));
    line.require(std::abs(r_peak - profile.x_star) <= grid.spacing(),
                 tag + "argmax u = " + fmt(r_peak, 4) + ", argmin V~ = " + fmt(profile.x_star, 4));
  }
}

SectionConfig classical_section(double v22) {
  SectionConfig s;
  s.params.m_tilde = 1.0;
  s.params.v_tilde_2 = 0.5;
  s.params.v_tilde_22 = v22;
  s.energy = 10.0;
  s.n_seeds = 16;
  s.t_max = 1e3;
  s.dt = 1e-3;
  return s;
}

void chaos_properties(Line& line) {
  const WorkerPool pool(1);
  const auto mixed = poincare_section(classical_section(0.05), &pool);
  line.require(mixed.max_energy_error() < kC7Containment,
               "classical v22=0.05, E=10, t_max=1e3: max |H-E|/E = " + fmt(mixed.max_energy_error(), 3) +
                   " over " + std::to_string(mixed.n_points()) + " crossings");

  const auto integrable = poincare_section(classical_section(0.0), &pool);
  const double E = 10.0;
  double worst = 0.0;
  for (const auto& t : integrable.trajectories) {
    std::vector<double> ex;
    for (const auto& p : t.points) ex.push_back(p.px * p.px / 2.0 + 0.5 * p.x * p.x);
    double mean = 0.0;
    for (double e : ex) mean += e / static_cast<double>(ex.size());
    double var = 0.0;
    for (double e : ex) var += (e - mean) * (e - mean) / static_cast<double>(ex.size());
    worst = std::max(worst, var);
  }
  line.require(worst < kC7Variance * E * E,
               "integrable v22=0: worst per-trajectory variance of p_x^2/2m + v2 x^2 = " + fmt(worst, 3) +
                   " < " + fmt(kC7Variance * E * E, 3));

  // Quantum action at the operating point T = 4.5.
  ClassicalAction action;
  action.potential = Quartic2D{0.0, 0.5, 0.05, 0.0};
  const double T = 4.5;
  std::vector<Vec2> boundary;
  for (double x : linspace(-2.0, 2.0, 5)) {
    for (double y : linspace(-2.0, 2.0, 5)) boundary.push_back({x, y});
  }
  const auto table = amplitude_table_2d(action, {-7.0, 7.0, 96}, boundary, T, 1e-10);
  FitConfig2D config;
  config.boundary_points = boundary;
  const auto ansatz = QuantumActionParams2D::from_classical(action, T);
  const auto canonical = fit_quantum_action_2d(table, ansatz, config);
  line.require(canonical.converged && canonical.params.v_tilde_22 < kC7V22Classical,
               "T=4.5: v_tilde_22 = " + fmt(canonical.params.v_tilde_22) + " +- " +
                   fmt(canonical.uncertainties.v_tilde_22, 2) + " < 0.05");
  line.info("T=4.5: m_tilde = " + fmt(canonical.params.m_tilde) + ", v_tilde_2 = " +
            fmt(canonical.params.v_tilde_2) + ", v_tilde_4 = " + fmt(canonical.params.v_tilde_4, 3));

  config.cross_terms = true;
  const auto extended = fit_quantum_action_2d(table, ansatz, config);
  const auto report = validate_symmetries(extended.params, extended.uncertainties, kC7CrossTerm);
  std::string values;
  const auto v = extended.params.cross_terms->values();
  for (std::size_t k = 0; k < CrossTerms2D::size; ++k) {
    values += std::string(k ? ", " : "") + CrossTerms2D::names()[k] + " " + fmt(v[k], 2);
  }
  line.require(report.pass, "T=4.5 cross terms within max(" + fmt(kC7CrossTerm) + ", sigma): " + values);

  SectionConfig quantum = classical_section(0.0);
  quantum.params = canonical.params;
  const auto qsection = poincare_section(quantum, &pool);
  line.require(qsection.max_energy_error() < kC7Containment,
               "quantum action, E=10, t_max=1e3: max |H-E|/E = " + fmt(qsection.max_energy_error(), 3));
  line.info("section point sets are checked by property only; seeding is not tied to any published portrait");
}

int shell(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(Line& line, const std::string& binary, const std::string& configs,
                 const std::string& scratch) {
  const std::pair<const char*, const char*> runs[] = {
      {"amplitude", "double_well"},     {"ground-state", "double_well"},
      {"fit", "double_well"},           {"fit", "classical_limit"},
      {"fit-family", "double_well"},    {"qpotential", "harmonic"},
      {"instanton", "double_well"},     {"amplitude", "anharmonic2d"},
      {"fit", "anharmonic2d"},          {"poincare", "anharmonic2d"},
      {"poincare", "anharmonic2d_classical"}, {"hydrogen", "hydrogen"}};
  fs::remove_all(scratch);
  for (const auto& [command, config] : runs) {
    std::vector<fs::path> dirs;
    bool ran = true;
    for (const char* threads : {"1", "1", "2"}) {
      const fs::path out = fs::path(scratch) / (std::string(command) + "-" + config + "-" +
                                                std::to_string(dirs.size()) + "-t" + threads);
      const std::string cmd = "'" + binary + "' " + command + " --config '" + configs + "/" + config +
                              ".cfg' --threads " + threads + " --out '" + out.string() + "' > /dev/null";
      ran = ran && shell(cmd) == 0;
      dirs.push_back(out);
    }
    std::size_t files = 0;
    bool same = ran;
    if (ran) {
      for (const auto& entry : fs::directory_iterator(dirs[0])) {
        const std::string reference = slurp(entry.path());
        for (std::size_t k = 1; k < dirs.size(); ++k) {
          same = same && slurp(dirs[k] / entry.path().filename()) == reference;
        }
        ++files;
      }
    }
    line.require(same && files > 0, std::string(command) + " " + config + ": " + std::to_string(files) +
                                        " artifacts identical over two runs and 1 vs 2 threads");
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: %s <qaction binary> <configs dir> <scratch dir>\n", argv[0]);
    return 64;
  }
  run("C1", "harmonic identity at T = 0.5, 1, 2", kLimitC1, harmonic_identity);
  run("C2", "propagator oracles (free particle, harmonic)", kLimitC2, propagator_oracles);
  run("C3", "double-well fit at T = 0.5 against the quoted parameters", kLimitC3, double_well_reproduction);
  run("C4", "classical limit at T = 0.05 within 2%", 0, classical_limit);
  run("C5", "hydrogen sectors l = 1..4", kLimitC5, hydrogen_sectors);
  run("C6", "asymptotic extraction, transformation law, WKB", kLimitC6, asymptotic_analytics);
  run("C7", "chaos properties at E = 10", kLimitC7, chaos_properties);
  run("C8", "CLI byte-reproducibility", 0, [&](Line& line) { determinism(line, argv[1], argv[2], argv[3]); });
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
