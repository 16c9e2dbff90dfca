#include "qaction/fitter.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "qaction/errors.hpp"
#include "qaction/trajectory.hpp"

namespace qaction {

namespace {

constexpr std::array<const char*, 5> kCoefficientNames{"v_tilde_0", "v_tilde_1", "v_tilde_2",
                                                       "v_tilde_3", "v_tilde_4"};

/// Single residual, written once so that fit and re-evaluation round identically.
double pair_residual(double sqrt_w, double ln_g, double ln_z, double s) {
  return sqrt_w * ((ln_g - ln_z) + s);
}

double ordered_sum_of_squares(const std::vector<double>& r) {
  double sum = 0.0;
  for (double v : r) sum += v * v;
  return sum;
}

std::vector<double> resolved_weights(const std::vector<double>& weights, std::size_t n) {
  if (weights.empty()) return std::vector<double>(n, 1.0);
  if (weights.size() != n) {
    throw ArgumentError("weights have " + std::to_string(weights.size()) + " entries for " +
                        std::to_string(n) + " pairs");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ArgumentError("weights must be non-negative");
  }
  return weights;
}

struct PairActions {
  std::vector<double> s;                     // S / hbar
  std::vector<ActionGradient1D> gradient;    // dS/dtheta / hbar
  std::size_t max_extremals = 0;
};

PairActions pair_actions(const AmplitudeTable& table, const QuantumActionParams1D& params,
                         const FitConfig& config, const WorkerPool* pool) {
  const std::size_t n = table.size();
  PairActions out;
  out.s.resize(n);
  out.gradient.resize(n);
  std::vector<std::size_t> extremals(n);
  BvpOptions options;
  options.multi_start = config.multi_start > 1;
  parallel_for(pool, n, [&](std::size_t p) {
    const BoundaryPair b{table.pairs[p].first, table.pairs[p].second, table.transition_time};
    ActionEstimate e = extrapolated_action(params, b, config.n_t, config.bvp_tol, options);
    out.s[p] = e.sigma / config.hbar;
    e.gradient.m_tilde /= config.hbar;
    for (double& g : e.gradient.v_tilde) g /= config.hbar;
    out.gradient[p] = e.gradient;
    extremals[p] = e.distinct_minima;
  });
  for (std::size_t e : extremals) out.max_extremals = std::max(out.max_extremals, e);
  return out;
}

/// Parameter vector layout for one normalization gauge.
struct Layout1D {
  Normalization normalization;
  double fixed_v0;

  std::size_t size() const { return normalization == Normalization::Free ? 5 : 6; }

  std::vector<std::string> names() const {
    std::vector<std::string> n{"m_tilde"};
    for (std::size_t k = normalization == Normalization::Free ? 1 : 0; k < 5; ++k) {
      n.emplace_back(kCoefficientNames[k]);
    }
    return n;
  }

  Eigen::VectorXd pack(const QuantumActionParams1D& p) const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(size()));
    theta(0) = p.m_tilde;
    const std::size_t first = normalization == Normalization::Free ? 1 : 0;
    for (std::size_t k = first; k < 5; ++k) {
      theta(static_cast<Eigen::Index>(k - first + 1)) = p.v_tilde[k];
    }
    return theta;
  }

  QuantumActionParams1D unpack(const Eigen::VectorXd& theta, double T) const {
    QuantumActionParams1D p;
    p.m_tilde = theta(0);
    p.transition_time = T;
    const std::size_t first = normalization == Normalization::Free ? 1 : 0;
    if (first == 1) p.v_tilde[0] = fixed_v0;
    for (std::size_t k = first; k < 5; ++k) {
      p.v_tilde[k] = theta(static_cast<Eigen::Index>(k - first + 1));
    }
    return p;
  }

  /// d(S/hbar)/dtheta in layout order.
  Eigen::VectorXd derivative(const ActionGradient1D& g) const {
    Eigen::VectorXd d(static_cast<Eigen::Index>(size()));
    d(0) = g.m_tilde;
    const std::size_t first = normalization == Normalization::Free ? 1 : 0;
    for (std::size_t k = first; k < 5; ++k) {
      d(static_cast<Eigen::Index>(k - first + 1)) = g.v_tilde[k];
    }
    return d;
  }
};

}  // namespace

std::string to_string(Normalization n) {
  return n == Normalization::Free ? "free" : "free_particle";
}

Normalization parse_normalization(const std::string& text) {
  if (text == "free_particle") return Normalization::FreeParticle;
  if (text == "free") return Normalization::Free;
  throw ConfigError("unknown normalization '" + text + "' (expected free_particle or free)");
}

double free_particle_ln_z(double mass, double hbar, double T, int dimensions) {
  return 0.5 * static_cast<double>(dimensions) * std::log(mass / (2.0 * std::numbers::pi * hbar * T));
}

void FitConfig::validate() const {
  if (!(floor > 0.0 && floor < 1.0)) throw ArgumentError("floor must lie in (0, 1)");
  if (optimizer.max_iter < 100) throw ArgumentError("optimizer.max_iter must be >= 100");
  if (n_t < 64) throw ArgumentError("n_t must be >= 64");
  if (multi_start < 1) throw ArgumentError("multi_start must be >= 1");
  if (!(bvp_tol > 0.0) || !(hbar > 0.0)) throw ArgumentError("bvp_tol and hbar must be positive");
}

std::vector<double> fit_residuals(const AmplitudeTable& table, const QuantumActionParams1D& params,
                                  const FitConfig& config, const WorkerPool* pool) {
  const std::vector<double> w = resolved_weights(config.weights, table.size());
  const PairActions a = pair_actions(table, params, config, pool);
  std::vector<double> r(table.size());
  for (std::size_t p = 0; p < table.size(); ++p) {
    r[p] = pair_residual(std::sqrt(w[p]), std::log(table.values[p]), params.ln_z, a.s[p]);
  }
  return r;
}

double evaluate_chi2(const AmplitudeTable& table, const QuantumActionParams1D& params,
                     const FitConfig& config, const WorkerPool* pool) {
  return ordered_sum_of_squares(fit_residuals(table, params, config, pool));
}

FitResult fit_quantum_action(const AmplitudeTable& table, const QuantumActionParams1D& ansatz,
                             const FitConfig& config, const WorkerPool* pool) {
  config.validate();
  ansatz.validate();
  const std::size_t n = table.size();
  const double T = table.transition_time;
  const Layout1D layout{config.normalization, ansatz.v_tilde[0]};
  const std::size_t n_free = layout.size() + (config.normalization == Normalization::Free ? 1 : 0);
  if (n < 3 * n_free) {
    throw DegenerateTableError("table has " + std::to_string(n) + " pairs; need at least " +
                               std::to_string(3 * n_free) + " for " + std::to_string(n_free) +
                               " free parameters");
  }
  const std::vector<double> w = resolved_weights(config.weights, n);
  std::vector<double> ln_g(n), sqrt_w(n);
  double w_sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    ln_g[p] = std::log(table.values[p]);
    sqrt_w[p] = std::sqrt(w[p]);
    w_sum += w[p];
  }
  const auto p_dim = static_cast<Eigen::Index>(layout.size());

  // ln Z for trial parameters given their pair actions.
  auto normalization_of = [&](const QuantumActionParams1D& q, const PairActions& a) {
    if (config.normalization == Normalization::FreeParticle) {
      return free_particle_ln_z(q.m_tilde, config.hbar, T, 1);
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += w[p] * (ln_g[p] + a.s[p]);
    return acc / w_sum;
  };

  const lsq::Evaluator evaluate = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& r,
                                      Eigen::MatrixXd& J) {
    const QuantumActionParams1D q = layout.unpack(theta, T);
    if (!(q.m_tilde > 0.0)) return false;
    PairActions a;
    try {
      a = pair_actions(table, q, config, pool);
    } catch (const SolverError&) {
      return false;
    }
    const double ln_z = normalization_of(q, a);
    r.resize(static_cast<Eigen::Index>(n));
    J.resize(static_cast<Eigen::Index>(n), p_dim);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p_dim);
    if (config.normalization == Normalization::Free) {
      for (std::size_t p = 0; p < n; ++p) mean += w[p] * layout.derivative(a.gradient[p]);
      mean /= w_sum;
    }
    for (std::size_t p = 0; p < n; ++p) {
      const auto row = static_cast<Eigen::Index>(p);
      r(row) = pair_residual(sqrt_w[p], ln_g[p], ln_z, a.s[p]);
      Eigen::VectorXd d = layout.derivative(a.gradient[p]) - mean;
      if (config.normalization == Normalization::FreeParticle) d(0) -= 0.5 / q.m_tilde;
      J.row(row) = sqrt_w[p] * d.transpose();
    }
    return true;
  };

  {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    if (!evaluate(layout.pack(ansatz), r, J)) {
      throw SolverError("boundary-value solve failed at the ansatz",
                        std::numeric_limits<double>::infinity());
    }
    lsq::require_full_rank(J, layout.names());
  }
  const lsq::Outcome outcome = lsq::levenberg_marquardt(evaluate, layout.pack(ansatz), config.optimizer);

  FitResult fit;
  fit.normalization = config.normalization;
  fit.converged = outcome.converged;
  fit.iterations = outcome.iterations;
  fit.n_pairs = n;
  fit.params = layout.unpack(outcome.theta, T);
  const PairActions final_actions = pair_actions(table, fit.params, config, pool);
  fit.params.ln_z = normalization_of(fit.params, final_actions);
  fit.max_extremals = final_actions.max_extremals;
  std::vector<double> r(n);
  for (std::size_t p = 0; p < n; ++p) {
    r[p] = pair_residual(sqrt_w[p], ln_g[p], fit.params.ln_z, final_actions.s[p]);
  }
  fit.chi2 = ordered_sum_of_squares(r);

  // Covariance over the free parameters; in the Free gauge ln Z is appended.
  const bool free_z = config.normalization == Normalization::Free;
  Eigen::MatrixXd J(static_cast<Eigen::Index>(n), p_dim + (free_z ? 1 : 0));
  for (std::size_t p = 0; p < n; ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    Eigen::VectorXd d = layout.derivative(final_actions.gradient[p]);
    if (!free_z) d(0) -= 0.5 / fit.params.m_tilde;
    J.row(row).head(p_dim) = sqrt_w[p] * d.transpose();
    if (free_z) J(row, p_dim) = -sqrt_w[p];
  }
  const Eigen::MatrixXd cov = lsq::covariance(J, fit.chi2);
  auto sigma = [&](Eigen::Index k) { return std::sqrt(std::max(0.0, cov(k, k))); };
  fit.uncertainties.m_tilde = sigma(0);
  const std::size_t first = free_z ? 1 : 0;
  for (std::size_t k = first; k < 5; ++k) {
    fit.uncertainties.v_tilde[k] = sigma(static_cast<Eigen::Index>(k - first + 1));
  }
  fit.uncertainties.ln_z =
      free_z ? sigma(p_dim) : fit.uncertainties.m_tilde / (2.0 * fit.params.m_tilde);
  return fit;
}

FamilyResult fit_family(const ClassicalAction& action, const GridSpec1D& grid,
                        const std::vector<double>& T_list, const FitConfig& config,
                        const WorkerPool* pool) {
  for (std::size_t k = 1; k < T_list.size(); ++k) {
    if (!(T_list[k] > T_list[k - 1])) throw ArgumentError("T_list must be strictly ascending");
  }
  DecomposeOptions options;
  options.hbar = config.hbar;
  const SpectralDecomposition decomp = spectral_decompose(action, grid, 0, options);
  FamilyResult family;
  QuantumActionParams1D ansatz = QuantumActionParams1D::from_classical(action);
  for (double T : T_list) {
    AmplitudeTable table;
    try {
      table = amplitude_table(decomp, config.boundary_grid, T, config.floor, pool);
      ansatz.transition_time = T;
      family.fits.push_back(fit_quantum_action(table, ansatz, config, pool));
    } catch (const DegenerateTableError& e) {
      family.stopped = "T = " + format_number(T) + ": " + e.what();
      break;
    }
    ansatz = family.fits.back().params;
  }
  return family;
}

KeyValueDocument to_document(const FitResult& fit) {
  KeyValueDocument doc;
  doc.set("fit.T", fit.params.transition_time.value_or(0.0));
  doc.set("fit.normalization", to_string(fit.normalization));
  doc.set("fit.m_tilde", fit.params.m_tilde);
  doc.set("fit.m_tilde.sigma", fit.uncertainties.m_tilde);
  for (std::size_t k = 0; k < 5; ++k) {
    const std::string key = std::string("fit.") + kCoefficientNames[k];
    doc.set(key, fit.params.v_tilde[k]);
    doc.set(key + ".sigma", fit.uncertainties.v_tilde[k]);
  }
  doc.set("fit.ln_z", fit.params.ln_z);
  doc.set("fit.ln_z.sigma", fit.uncertainties.ln_z);
  doc.set("fit.chi2", fit.chi2);
  doc.set("fit.n_pairs", std::to_string(fit.n_pairs));
  doc.set("fit.converged", fit.converged);
  doc.set("fit.iterations", std::to_string(fit.iterations));
  doc.set("fit.max_extremals", std::to_string(fit.max_extremals));
  return doc;
}

FitResult fit_from_document(const KeyValueDocument& doc) {
  FitResult fit;
  auto number = [&](const std::string& key) { return parse_double(doc.get(key), key); };
  fit.params.transition_time = number("fit.T");
  fit.normalization = parse_normalization(doc.get("fit.normalization"));
  fit.params.m_tilde = number("fit.m_tilde");
  fit.uncertainties.m_tilde = number("fit.m_tilde.sigma");
  for (std::size_t k = 0; k < 5; ++k) {
    const std::string key = std::string("fit.") + kCoefficientNames[k];
    fit.params.v_tilde[k] = number(key);
    fit.uncertainties.v_tilde[k] = number(key + ".sigma");
  }
  fit.params.ln_z = number("fit.ln_z");
  fit.uncertainties.ln_z = number("fit.ln_z.sigma");
  fit.chi2 = number("fit.chi2");
  fit.n_pairs = static_cast<std::size_t>(parse_integer(doc.get("fit.n_pairs"), "fit.n_pairs"));
  fit.converged = parse_bool(doc.get("fit.converged"), "fit.converged");
  fit.iterations = static_cast<std::size_t>(parse_integer(doc.get("fit.iterations"), "fit.iterations"));
  fit.max_extremals =
      static_cast<std::size_t>(parse_integer(doc.get("fit.max_extremals"), "fit.max_extremals"));
  return fit;
}

void write_fit_result(std::ostream& os, const FitResult& fit) {
  os << to_document(fit).canonical_text();
}

}  // namespace qaction
