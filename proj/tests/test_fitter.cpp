#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "qaction/errors.hpp"
#include "qaction/fitter.hpp"

using namespace qaction;

namespace {

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

/// Table of the exact harmonic kernel on the boundary grid.
AmplitudeTable mehler_table(const std::vector<double>& boundary, double T) {
  AmplitudeTable t;
  t.transition_time = T;
  t.floor = 1e-10;
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    for (std::size_t j = i; j < boundary.size(); ++j) {
      t.pairs.emplace_back(boundary[i], boundary[j]);
      t.values.push_back(test::mehler_kernel(boundary[i], boundary[j], T));
    }
  }
  return t;
}

}  // namespace

TEST_SUITE("fitter") {
  TEST_CASE("harmonic oscillator is reproduced exactly") {
    const double T = 1.0;
    const auto table = mehler_table(linspace(-2, 2, 11), T);
    const auto ansatz = QuantumActionParams1D::from_classical(polynomial({0.1, 0, 0.45, 0, 0.02}), T);
    FitConfig config;
    const FitResult fit = fit_quantum_action(table, ansatz, config);
    CHECK(fit.converged);
    CHECK(fit.n_pairs == 66);
    CHECK(fit.params.m_tilde == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(fit.params.v_tilde[1]) < 1e-8);
    CHECK(fit.params.v_tilde[2] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(std::abs(fit.params.v_tilde[3]) < 1e-8);
    CHECK(std::abs(fit.params.v_tilde[4]) < 1e-7);
    // Free-particle gauge: v0 absorbs the prefactor ratio ln(sinh T / T) / (2 T).
    CHECK(fit.params.v_tilde[0] == doctest::Approx(std::log(std::sinh(T) / T) / (2 * T)).epsilon(1e-7));
    CHECK(fit.chi2 < 1e-12);
    CHECK(validate_symmetries(fit.params, fit.uncertainties, 1e-3).pass);

    // Re-evaluating chi2 at the optimum reproduces the reported value.
    CHECK(evaluate_chi2(table, fit.params, config) == doctest::Approx(fit.chi2).epsilon(1e-6).scale(1e-14));

    // Free normalization: v0 stays fixed and ln Z takes the Mehler prefactor.
    config.normalization = Normalization::Free;
    auto fixed = ansatz;
    fixed.v_tilde[0] = 0.0;
    const FitResult free = fit_quantum_action(table, fixed, config);
    CHECK(free.params.v_tilde[0] == 0.0);
    CHECK(free.params.v_tilde[2] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(free.params.ln_z ==
          doctest::Approx(0.5 * std::log(1.0 / (2 * std::numbers::pi * std::sinh(T)))).epsilon(1e-7));
  }

  TEST_CASE("a constant shift moves only v0 or ln Z") {
    const double T = 0.5;
    auto table = mehler_table(linspace(-2, 2, 9), T);
    const auto ansatz = QuantumActionParams1D::from_classical(polynomial({0, 0, 0.5}), T);
    const FitResult base = fit_quantum_action(table, ansatz, {});
    for (double& g : table.values) g *= std::exp(0.3);
    const FitResult shifted = fit_quantum_action(table, ansatz, {});
    CHECK(shifted.params.v_tilde[0] == doctest::Approx(base.params.v_tilde[0] - 0.3 / T).epsilon(1e-8));
    CHECK(shifted.params.v_tilde[2] == doctest::Approx(base.params.v_tilde[2]).epsilon(1e-8));
  }

  TEST_CASE("refit from a perturbed start and with pairs removed") {
    const double T = 0.5;
    const auto dw = polynomial({0.5, 0, -1, 0, 0.5});
    const auto decomp = spectral_decompose(dw, {-10.0, 10.0, 1024}, 0);
    const auto boundary = linspace(-2, 2, 13);
    const auto table = amplitude_table(decomp, boundary, T, 1e-10);
    const auto ansatz = QuantumActionParams1D::from_classical(dw, T);
    const FitConfig config;
    const FitResult fit = fit_quantum_action(table, ansatz, config);
    CHECK(fit.converged);
    CHECK(validate_symmetries(fit.params, fit.uncertainties, 1e-3).pass);

    auto perturbed = fit.params;
    perturbed.m_tilde *= 1.05;
    perturbed.v_tilde[2] -= 0.05;
    perturbed.v_tilde[4] += 0.05;
    const FitResult again = fit_quantum_action(table, perturbed, config);
    CHECK(again.params.m_tilde == doctest::Approx(fit.params.m_tilde).epsilon(1e-6));
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(again.params.v_tilde[k] - fit.params.v_tilde[k]) < 1e-6);
    }

    // Dropping every third pair changes the optimum by well under its spread.
    AmplitudeTable thinned = table;
    thinned.pairs.clear();
    thinned.values.clear();
    for (std::size_t k = 0; k < table.size(); ++k) {
      if (k % 3 == 0) continue;
      thinned.pairs.push_back(table.pairs[k]);
      thinned.values.push_back(table.values[k]);
    }
    const FitResult sub = fit_quantum_action(thinned, ansatz, config);
    CHECK(std::abs(sub.params.v_tilde[2] - fit.params.v_tilde[2]) < 1e-2);
    CHECK(std::abs(sub.params.v_tilde[4] - fit.params.v_tilde[4]) < 1e-2);
  }

  TEST_CASE("degenerate tables are rejected") {
    const auto table = mehler_table(linspace(-1, 1, 4), 1.0);  // 10 pairs < 18
    const auto ansatz = QuantumActionParams1D::from_classical(polynomial({0, 0, 0.5}), 1.0);
    CHECK_THROWS_AS(fit_quantum_action(table, ansatz, {}), DegenerateTableError);
  }

  TEST_CASE("fit documents round-trip") {
    const auto table = mehler_table(linspace(-2, 2, 9), 1.0);
    const auto ansatz = QuantumActionParams1D::from_classical(polynomial({0, 0, 0.5}), 1.0);
    const FitResult fit = fit_quantum_action(table, ansatz, {});
    std::stringstream text;
    write_fit_result(text, fit);
    const FitResult back = fit_from_document(KeyValueDocument::parse(text));
    CHECK(back.params.m_tilde == fit.params.m_tilde);
    CHECK(back.params.v_tilde == fit.params.v_tilde);
    CHECK(back.params.ln_z == fit.params.ln_z);
    CHECK(back.params.transition_time == fit.params.transition_time);
    CHECK(back.chi2 == fit.chi2);
    CHECK(back.n_pairs == fit.n_pairs);
    CHECK(back.normalization == fit.normalization);
  }

  TEST_CASE("family sweep warm-starts in ascending T") {
    FitConfig config;
    config.boundary_grid = linspace(-2, 2, 9);
    CHECK_THROWS_AS(fit_family(polynomial({0, 0, 0.5}), {-10.0, 10.0, 512}, {1.0, 0.25}, config),
                    ArgumentError);
    const auto family = fit_family(polynomial({0, 0, 0.5}), {-10.0, 10.0, 512}, {0.25, 1.0}, config);
    REQUIRE(family.fits.size() == 2);
    CHECK(family.fits[0].params.transition_time == 0.25);
    CHECK(family.fits[1].params.transition_time == 1.0);
    for (const auto& f : family.fits) {
      CHECK(f.params.v_tilde[2] == doctest::Approx(0.5).epsilon(1e-5));
    }
  }

  TEST_CASE("2-D separable oscillator") {
    ClassicalAction action;
    action.potential = Quartic2D{0.0, 0.5, 0.0, 0.0};
    std::vector<Vec2> boundary;
    for (double x : linspace(-1.5, 1.5, 4)) {
      for (double y : linspace(-1.5, 1.5, 4)) boundary.push_back({x, y});
    }
    const double T = 0.5;
    const auto table = amplitude_table_2d(action, {-7.0, 7.0, 64}, boundary, T, 1e-10);
    FitConfig2D config;
    config.boundary_points = boundary;
    const auto fit =
        fit_quantum_action_2d(table, QuantumActionParams2D::from_classical(action, T), config);
    CHECK(fit.converged);
    CHECK(fit.params.m_tilde == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(fit.params.v_tilde_2 == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::abs(fit.params.v_tilde_22) < 1e-3);
    CHECK(std::abs(fit.params.v_tilde_4) < 1e-3);
  }
}
