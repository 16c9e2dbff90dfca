#include <cmath>
#include <limits>
#include <ostream>

#include "qaction/errors.hpp"
#include "qaction/fitter.hpp"
#include "qaction/trajectory.hpp"

namespace qaction {

namespace {

// Sensitivity slots from action_sensitivity_2d: m, c, a_0..a_7.
constexpr std::size_t kSlotM = 0;
constexpr std::size_t kSlotC = 1;
constexpr std::size_t kSlotA = 2;

struct Parameter2D {
  const char* name;
  std::size_t slot;
};

// Canonical parameters first, then the diagnostic cross terms.
constexpr std::array<Parameter2D, 10> kAll{{{"m_tilde", kSlotM},
                                            {"v_tilde_0", kSlotA + 0},
                                            {"v_tilde_2", kSlotA + 1},
                                            {"v_tilde_22", kSlotA + 2},
                                            {"v_tilde_4", kSlotA + 3},
                                            {"xdot_ydot", kSlotC},
                                            {"xy", kSlotA + 4},
                                            {"xy3_x3y", kSlotA + 5},
                                            {"x2y4_x4y2", kSlotA + 6},
                                            {"x4y4", kSlotA + 7}}};

/// Extended action as a flat vector over the sensitivity slots.
std::array<double, 2 + kPotentialTerms2D> slots_of(const ExtendedAction2D& e) {
  std::array<double, 2 + kPotentialTerms2D> s{};
  s[kSlotM] = e.m_tilde;
  s[kSlotC] = e.c_xdot_ydot;
  for (std::size_t j = 0; j < kPotentialTerms2D; ++j) s[kSlotA + j] = e.a[j];
  return s;
}

ExtendedAction2D action_of(const std::array<double, 2 + kPotentialTerms2D>& s) {
  ExtendedAction2D e;
  e.m_tilde = s[kSlotM];
  e.c_xdot_ydot = s[kSlotC];
  for (std::size_t j = 0; j < kPotentialTerms2D; ++j) e.a[j] = s[kSlotA + j];
  return e;
}

QuantumActionParams2D params_of(const ExtendedAction2D& e, bool cross, double T) {
  QuantumActionParams2D p;
  p.m_tilde = e.m_tilde;
  p.v_tilde_0 = e.a[0];
  p.v_tilde_2 = e.a[1];
  p.v_tilde_22 = e.a[2];
  p.v_tilde_4 = e.a[3];
  if (cross) p.cross_terms = CrossTerms2D{e.c_xdot_ydot, e.a[4], e.a[5], e.a[6], e.a[7]};
  p.transition_time = T;
  return p;
}

}  // namespace

void FitConfig2D::validate() const {
  if (!(floor > 0.0 && floor < 1.0)) throw ArgumentError("floor must lie in (0, 1)");
  if (optimizer.max_iter < 100) throw ArgumentError("optimizer.max_iter must be >= 100");
  if (n_t < 64) throw ArgumentError("n_t must be >= 64");
  if (!(bvp_tol > 0.0) || !(hbar > 0.0)) throw ArgumentError("bvp_tol and hbar must be positive");
}

FitResult2D fit_quantum_action_2d(const AmplitudeTable2D& table,
                                  const QuantumActionParams2D& ansatz, const FitConfig2D& config,
                                  const WorkerPool* pool) {
  config.validate();
  ansatz.validate();
  const std::size_t n = table.size();
  const double T = table.transition_time;
  const bool free_z = config.normalization == Normalization::Free;

  std::vector<Parameter2D> free;
  for (std::size_t k = 0; k < (config.cross_terms ? kAll.size() : 5); ++k) {
    if (free_z && kAll[k].slot == kSlotA) continue;  // v_0 is the gauge in the Free normalization
    free.push_back(kAll[k]);
  }
  const std::size_t n_free = free.size() + (free_z ? 1 : 0);
  if (n < 3 * n_free) {
    throw DegenerateTableError("2-D table has " + std::to_string(n) + " pairs; need at least " +
                               std::to_string(3 * n_free));
  }
  std::vector<double> w = config.weights.empty() ? std::vector<double>(n, 1.0) : config.weights;
  if (w.size() != n) throw ArgumentError("weights do not match the 2-D table");
  std::vector<double> ln_g(n), sqrt_w(n);
  double w_sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    ln_g[p] = std::log(table.values[p]);
    sqrt_w[p] = std::sqrt(w[p]);
    w_sum += w[p];
  }
  const auto base = slots_of(ExtendedAction2D::from(ansatz));
  const auto p_dim = static_cast<Eigen::Index>(free.size());

  auto unpack = [&](const Eigen::VectorXd& theta) {
    auto s = base;
    for (std::size_t k = 0; k < free.size(); ++k) s[free[k].slot] = theta(static_cast<Eigen::Index>(k));
    return action_of(s);
  };
  Eigen::VectorXd theta0(p_dim);
  for (std::size_t k = 0; k < free.size(); ++k) theta0(static_cast<Eigen::Index>(k)) = base[free[k].slot];

  // Per-pair warm starts; each slot is written only by its own pair.
  std::vector<std::vector<Vec2>> cache(n);
  struct PairValues {
    std::vector<double> s;
    std::vector<std::array<double, 2 + kPotentialTerms2D>> grad;
  };
  auto pair_values = [&](const ExtendedAction2D& e) {
    PairValues v;
    v.s.resize(n);
    v.grad.resize(n);
    BvpOptions options;
    parallel_for(pool, n, [&](std::size_t p) {
      const BoundaryPair2D b{table.pairs[p].initial, table.pairs[p].final, T};
      const std::vector<Vec2>* warm = cache[p].empty() ? nullptr : &cache[p];
      const Trajectory2D coarse = solve_euclidean_bvp_2d(e, b, config.n_t, config.bvp_tol, warm, options);
      BvpOptions single = options;
      single.multi_start = false;
      const Trajectory2D fine =
          solve_euclidean_bvp_2d(e, b, 2 * config.n_t, config.bvp_tol, &coarse.path, single);
      const auto gc = action_sensitivity_2d(coarse.path, T);
      const auto gf = action_sensitivity_2d(fine.path, T);
      v.s[p] = (4.0 * fine.sigma - coarse.sigma) / 3.0 / config.hbar;
      for (std::size_t j = 0; j < gc.size(); ++j) v.grad[p][j] = (4.0 * gf[j] - gc[j]) / 3.0 / config.hbar;
      cache[p] = coarse.path;
    });
    return v;
  };
  auto ln_z_of = [&](const ExtendedAction2D& e, const PairValues& v) {
    if (!free_z) return free_particle_ln_z(e.m_tilde, config.hbar, T, 2);
    double acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += w[p] * (ln_g[p] + v.s[p]);
    return acc / w_sum;
  };
  auto derivative = [&](const PairValues& v, std::size_t p) {
    Eigen::VectorXd d(p_dim);
    for (std::size_t k = 0; k < free.size(); ++k) d(static_cast<Eigen::Index>(k)) = v.grad[p][free[k].slot];
    return d;
  };

  const lsq::Evaluator evaluate = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& r,
                                      Eigen::MatrixXd& J) {
    const ExtendedAction2D e = unpack(theta);
    if (!(e.m_tilde > 0.0) || !(std::abs(e.c_xdot_ydot) < e.m_tilde)) return false;
    PairValues v;
    try {
      v = pair_values(e);
    } catch (const SolverError&) {
      return false;
    }
    const double ln_z = ln_z_of(e, v);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p_dim);
    if (free_z) {
      for (std::size_t p = 0; p < n; ++p) mean += w[p] * derivative(v, p);
      mean /= w_sum;
    }
    r.resize(static_cast<Eigen::Index>(n));
    J.resize(static_cast<Eigen::Index>(n), p_dim);
    for (std::size_t p = 0; p < n; ++p) {
      const auto row = static_cast<Eigen::Index>(p);
      r(row) = sqrt_w[p] * ((ln_g[p] - ln_z) + v.s[p]);
      Eigen::VectorXd d = derivative(v, p) - mean;
      if (!free_z) d(0) -= 1.0 / e.m_tilde;
      J.row(row) = sqrt_w[p] * d.transpose();
    }
    return true;
  };

  std::vector<std::string> names;
  for (const auto& f : free) names.emplace_back(f.name);
  {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    if (!evaluate(theta0, r, J)) {
      throw SolverError("2-D boundary-value solve failed at the ansatz",
                        std::numeric_limits<double>::infinity());
    }
    lsq::require_full_rank(J, names);
  }
  const lsq::Outcome outcome = lsq::levenberg_marquardt(evaluate, theta0, config.optimizer);

  FitResult2D fit;
  fit.normalization = config.normalization;
  fit.converged = outcome.converged;
  fit.iterations = outcome.iterations;
  fit.n_pairs = n;
  const ExtendedAction2D best = unpack(outcome.theta);
  fit.params = params_of(best, config.cross_terms, T);
  const PairValues v = pair_values(best);
  fit.params.ln_z = ln_z_of(best, v);
  fit.chi2 = 0.0;
  Eigen::MatrixXd J(static_cast<Eigen::Index>(n), p_dim + (free_z ? 1 : 0));
  for (std::size_t p = 0; p < n; ++p) {
    const double r = sqrt_w[p] * ((ln_g[p] - fit.params.ln_z) + v.s[p]);
    fit.chi2 += r * r;
    const auto row = static_cast<Eigen::Index>(p);
    Eigen::VectorXd d = derivative(v, p);
    if (!free_z) d(0) -= 1.0 / best.m_tilde;
    J.row(row).head(p_dim) = sqrt_w[p] * d.transpose();
    if (free_z) J(row, p_dim) = -sqrt_w[p];
  }
  const Eigen::MatrixXd cov = lsq::covariance(J, fit.chi2);
  std::array<double, 2 + kPotentialTerms2D> sigma{};
  for (std::size_t k = 0; k < free.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    sigma[free[k].slot] = std::sqrt(std::max(0.0, cov(kk, kk)));
  }
  fit.uncertainties.m_tilde = sigma[kSlotM];
  fit.uncertainties.v_tilde_0 = sigma[kSlotA + 0];
  fit.uncertainties.v_tilde_2 = sigma[kSlotA + 1];
  fit.uncertainties.v_tilde_22 = sigma[kSlotA + 2];
  fit.uncertainties.v_tilde_4 = sigma[kSlotA + 3];
  fit.uncertainties.cross_terms =
      CrossTerms2D{sigma[kSlotC], sigma[kSlotA + 4], sigma[kSlotA + 5], sigma[kSlotA + 6], sigma[kSlotA + 7]};
  fit.uncertainties.ln_z =
      free_z ? std::sqrt(std::max(0.0, cov(p_dim, p_dim))) : fit.uncertainties.m_tilde / best.m_tilde;
  return fit;
}

KeyValueDocument to_document(const FitResult2D& fit) {
  KeyValueDocument doc;
  const auto& p = fit.params;
  const auto& s = fit.uncertainties;
  doc.set("fit.T", p.transition_time.value_or(0.0));
  doc.set("fit.normalization", to_string(fit.normalization));
  auto put = [&](const std::string& name, double value, double sigma) {
    doc.set("fit." + name, value);
    doc.set("fit." + name + ".sigma", sigma);
  };
  put("m_tilde", p.m_tilde, s.m_tilde);
  put("v_tilde_0", p.v_tilde_0, s.v_tilde_0);
  put("v_tilde_2", p.v_tilde_2, s.v_tilde_2);
  put("v_tilde_22", p.v_tilde_22, s.v_tilde_22);
  put("v_tilde_4", p.v_tilde_4, s.v_tilde_4);
  if (p.cross_terms) {
    const auto values = p.cross_terms->values();
    const auto errors = s.cross_terms.values();
    for (std::size_t k = 0; k < CrossTerms2D::size; ++k) {
      put(std::string("cross.") + CrossTerms2D::names()[k], values[k], errors[k]);
    }
  }
  put("ln_z", p.ln_z, s.ln_z);
  doc.set("fit.chi2", fit.chi2);
  doc.set("fit.n_pairs", std::to_string(fit.n_pairs));
  doc.set("fit.converged", fit.converged);
  doc.set("fit.iterations", std::to_string(fit.iterations));
  return doc;
}

void write_fit_result(std::ostream& os, const FitResult2D& fit) {
  os << to_document(fit).canonical_text();
}

}  // namespace qaction
