#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qaction/errors.hpp"
#include "qaction/trajectory.hpp"

using namespace qaction;
using qaction::test::mehler_action;
using qaction::test::mehler_path;

namespace {

QuantumActionParams1D quantum(std::array<double, 5> v, double m = 1.0) {
  QuantumActionParams1D p;
  p.m_tilde = m;
  p.v_tilde = v;
  return p;
}

const QuantumActionParams1D kHarmonic = quantum({0, 0, 0.5, 0, 0});
const QuantumActionParams1D kDoubleWell = quantum({0.5, 0, -1, 0, 0.5});

double sigma(const QuantumActionParams1D& p, double a, double b, double T, std::size_t n = 64) {
  return extrapolated_action(p, {a, b, T}, n, 1e-10).sigma;
}

}  // namespace

TEST_SUITE("trajectory") {
  TEST_CASE("harmonic path and action match the closed form") {
    const auto sol = solve_euclidean_bvp(kHarmonic, {0.0, 1.0, 1.0}, 256, 1e-10);
    CHECK(mehler_action(0.0, 1.0, 1.0) == doctest::Approx(0.6565).epsilon(1e-4));
    for (std::size_t k = 0; k < sol.path.size(); ++k) {
      CHECK(std::abs(sol.path[k] - mehler_path(0.0, 1.0, 1.0, sol.times[k])) < 1e-5);
    }
    CHECK(std::abs(sigma(kHarmonic, 0.0, 1.0, 1.0) - mehler_action(0.0, 1.0, 1.0)) < 1e-8);
    CHECK(std::abs(sigma(kHarmonic, -1.3, 0.4, 2.5) - mehler_action(-1.3, 0.4, 2.5)) < 1e-8);
  }

  TEST_CASE("constant and free paths") {
    const auto rest = solve_euclidean_bvp(kHarmonic, {0.0, 0.0, 1.0}, 64, 1e-10);
    for (double x : rest.path) CHECK(std::abs(x) < 1e-14);
    CHECK(std::abs(rest.sigma) < 1e-14);

    const auto free = quantum({0, 0, 0, 0, 0}, 2.0);
    const auto sol = solve_euclidean_bvp(free, {-0.5, 1.5, 0.8}, 64, 1e-10);
    CHECK(sol.sigma == doctest::Approx(2.0 * 4.0 / (2.0 * 0.8)).epsilon(1e-10));
    for (std::size_t k = 0; k < sol.path.size(); ++k) {
      CHECK(std::abs(sol.path[k] - (-0.5 + 2.0 * sol.times[k] / 0.8)) < 1e-10);
    }
  }

  TEST_CASE("time reversal and additivity") {
    CHECK(sigma(kDoubleWell, -0.7, 1.2, 1.5) ==
          doctest::Approx(sigma(kDoubleWell, 1.2, -0.7, 1.5)).epsilon(1e-10));

    const double T1 = 0.6;
    const double T2 = 0.9;
    const auto whole = solve_euclidean_bvp(kDoubleWell, {-0.7, 1.2, T1 + T2}, 500, 1e-9);
    const double split = whole.path[200];  // t = T1
    const double joined = sigma(kDoubleWell, -0.7, split, T1) + sigma(kDoubleWell, split, 1.2, T2);
    CHECK(joined == doctest::Approx(sigma(kDoubleWell, -0.7, 1.2, T1 + T2)).epsilon(1e-6));

    // Splitting at the midpoint.
    const auto mid = solve_euclidean_bvp(kHarmonic, {-1.0, 1.5, 2.0}, 512, 1e-8);
    const double half = sigma(kHarmonic, -1.0, mid.path[256], 1.0) + sigma(kHarmonic, mid.path[256], 1.5, 1.0);
    CHECK(half == doctest::Approx(sigma(kHarmonic, -1.0, 1.5, 2.0)).epsilon(1e-6));
  }

  TEST_CASE("conserved Euclidean energy along the path") {
    for (const auto& p : {kHarmonic, kDoubleWell}) {
      const auto sol = solve_euclidean_bvp(p, {-1.5, 0.8, 2.0}, 256, 1e-9);
      CHECK(sol.epsilon_spread < 1e-6);
    }
    // Harmonic path 0 -> 1 over T = 1: epsilon = V - xdot^2 / 2 at t = 0, xdot(0) = 1 / sinh(1).
    const auto sol = solve_euclidean_bvp(kHarmonic, {0.0, 1.0, 1.0}, 256, 1e-9);
    const double oracle = -0.5 / std::pow(std::sinh(1.0), 2);
    CHECK(sol.epsilon == doctest::Approx(oracle).epsilon(1e-5));
  }

  TEST_CASE("reversed boundary gives the reversed path") {
    const auto forward = solve_euclidean_bvp(kDoubleWell, {-0.7, 1.2, 1.5}, 128, 1e-10);
    const auto backward = solve_euclidean_bvp(kDoubleWell, {1.2, -0.7, 1.5}, 128, 1e-10);
    const std::size_t n = forward.path.size();
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(forward.path[k] - backward.path[n - 1 - k]) < 1e-10);
    }
  }

  TEST_CASE("extrapolated action is stable under doubling n_t") {
    for (const auto& p : {kHarmonic, kDoubleWell}) {
      const double coarse = sigma(p, -1.2, 0.9, 1.7, 64);
      const double fine = sigma(p, -1.2, 0.9, 1.7, 128);
      CHECK(std::abs(coarse - fine) < 1e-6 * std::abs(fine));
    }
  }

  TEST_CASE("Richardson extrapolation improves on the plain sliced action") {
    const double exact = mehler_action(-1.0, 2.0, 1.5);
    const auto coarse = solve_euclidean_bvp(kHarmonic, {-1.0, 2.0, 1.5}, 64, 1e-10);
    const auto fine = solve_euclidean_bvp(kHarmonic, {-1.0, 2.0, 1.5}, 128, 1e-10);
    const double e_coarse = std::abs(coarse.sigma - exact);
    const double e_fine = std::abs(fine.sigma - exact);
    CHECK(e_fine == doctest::Approx(e_coarse / 4).epsilon(0.05));
    CHECK(std::abs(sigma(kHarmonic, -1.0, 2.0, 1.5, 64) - exact) < e_fine / 10);
  }

  TEST_CASE("parameter sensitivity matches finite differences") {
    const BoundaryPair b{-0.9, 1.1, 1.2};
    const auto est = extrapolated_action(kDoubleWell, b, 64, 1e-10);
    const double h = 1e-6;
    for (std::size_t k = 0; k < 5; ++k) {
      auto up = kDoubleWell;
      auto down = kDoubleWell;
      up.v_tilde[k] += h;
      down.v_tilde[k] -= h;
      const double fd =
          (extrapolated_action(up, b, 64, 1e-10).sigma - extrapolated_action(down, b, 64, 1e-10).sigma) /
          (2 * h);
      CHECK(est.gradient.v_tilde[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    auto up = kDoubleWell;
    auto down = kDoubleWell;
    up.m_tilde += h;
    down.m_tilde -= h;
    const double fd =
        (extrapolated_action(up, b, 64, 1e-10).sigma - extrapolated_action(down, b, 64, 1e-10).sigma) /
        (2 * h);
    CHECK(est.gradient.m_tilde == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }

  TEST_CASE("double-well extremals") {
    const auto minima = polynomial_minima(kDoubleWell.v_tilde);
    REQUIRE(minima.size() == 2);
    CHECK(minima[0] == doctest::Approx(-1.0));
    CHECK(minima[1] == doctest::Approx(1.0));
    CHECK(polynomial_minima({0, 0, 0.5, 0, 0}).size() == 1);

    // Long tunnelling time: the minimum-action path hugs the wells.
    const auto sol = solve_euclidean_bvp(kDoubleWell, {-1.0, 1.0, 12.0}, 400, 1e-10);
    CHECK(sol.residual < 1e-10);
    // Kink action int sqrt(2 m V) dx over [-1, 1] = int (1 - x^2) dx = 4/3.
    CHECK(sigma(kDoubleWell, -1.0, 1.0, 12.0, 400) == doctest::Approx(4.0 / 3.0).epsilon(1e-5));
  }

  TEST_CASE("argument checks") {
    CHECK_THROWS_AS(solve_euclidean_bvp(kHarmonic, {0.0, 1.0, 0.0}, 64, 1e-10), ArgumentError);
    CHECK_THROWS_AS(solve_euclidean_bvp(kHarmonic, {0.0, 1.0, -1.0}, 64, 1e-10), ArgumentError);
  }

  TEST_CASE("2-D separable paths") {
    QuantumActionParams2D p;
    p.v_tilde_2 = 0.5;
    const auto action = ExtendedAction2D::from(p);
    const auto sol = solve_euclidean_bvp_2d(action, {{-1.0, 0.5}, {0.8, 1.5}, 1.3}, 512, 1e-10);
    const double exact = mehler_action(-1.0, 0.8, 1.3) + mehler_action(0.5, 1.5, 1.3);
    CHECK(sol.sigma == doctest::Approx(exact).epsilon(1e-5));

    const auto swapped = solve_euclidean_bvp_2d(action, {{0.5, -1.0}, {1.5, 0.8}, 1.3}, 512, 1e-10);
    CHECK(swapped.sigma == doctest::Approx(sol.sigma).epsilon(1e-10));
  }

  TEST_CASE("real-time flow: harmonic period and energy") {
    QuantumActionParams2D p;
    p.v_tilde_2 = 0.5;  // omega = 1
    FlowSample s;
    s.q = {1.0, 0.0};
    s.p = {0.0, 0.7};
    const double period = 2 * std::numbers::pi;
    const auto samples = integrate_realtime(p, s, period, period / 4000);
    const auto& last = samples.back();
    CHECK(last.t == doctest::Approx(period));
    const double distance =
        std::hypot(std::hypot(last.q.x - 1.0, last.q.y), std::hypot(last.p.x, last.p.y - 0.7));
    CHECK(distance < 1e-6);

    // 1e5 steps on the coupled potential at E ~ 10. At dt = 1e-3 the second-order
    // error is ~1e-7; dt = 1.5e-4 brings it under 1e-8.
    p.v_tilde_22 = 0.05;
    FlowSample c;
    c.q = {1.0, 0.0};
    c.p = {1.5, 4.0};
    const auto long_run = integrate_realtime(p, c, 15.0, 1.5e-4, 1000);
    REQUIRE(long_run.size() == 101);
    for (const auto& x : long_run) {
      CHECK(std::abs(x.energy - long_run[0].energy) / long_run[0].energy < 1e-8);
    }
  }

  TEST_CASE("real-time flow: exchange symmetry and step checks") {
    QuantumActionParams2D p;
    p.v_tilde_2 = 0.5;
    p.v_tilde_22 = 0.05;
    FlowSample a;
    a.q = {1.0, -0.5};
    a.p = {0.3, 2.0};
    FlowSample b;
    b.q = {-0.5, 1.0};
    b.p = {2.0, 0.3};
    const auto fa = integrate_realtime(p, a, 20.0, 1e-3, 1000);
    const auto fb = integrate_realtime(p, b, 20.0, 1e-3, 1000);
    REQUIRE(fa.size() == fb.size());
    for (std::size_t k = 0; k < fa.size(); ++k) {
      CHECK(fa[k].q.x == fb[k].q.y);
      CHECK(fa[k].p.y == fb[k].p.x);
    }
    CHECK_THROWS_AS(integrate_realtime(p, a, 1.0, 0.1), ArgumentError);
  }
}
