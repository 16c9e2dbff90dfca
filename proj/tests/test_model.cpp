#include <doctest.h>

#include <cmath>
#include <random>

#include "qaction/errors.hpp"
#include "qaction/model.hpp"

using namespace qaction;

namespace {

PotentialSpec double_well() {
  const double c[] = {0.5, 0.0, -1.0, 0.0, 0.5};
  return Polynomial1D::from(c);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("potential values") {
    CHECK(eval_potential(double_well(), 1.0) == doctest::Approx(0.0));
    CHECK(eval_potential(double_well(), -1.0) == doctest::Approx(0.0));
    CHECK(eval_potential(PotentialSpec{Quartic2D{0.0, 0.5, 0.05, 0.0}}, Vec2{0.0, 0.0}) == 0.0);
    // hbar^2 l(l+1) / (2 m r^2) - e^2 / r at l = 1, r = 2: 2/8 - 1/2.
    CHECK(eval_potential(PotentialSpec{Radial{1, 1.0, 1.0, 1.0}}, 2.0) ==
          doctest::Approx(-0.25).epsilon(1e-15));
  }

  TEST_CASE("domain and dimension errors") {
    const PotentialSpec radial = Radial{1, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(eval_potential(radial, 0.0), DomainError);
    CHECK_THROWS_AS(eval_potential(radial, -1.0), DomainError);
    CHECK_THROWS_AS(eval_gradient(radial, 0.0), DomainError);
    CHECK_THROWS_AS(eval_potential(PotentialSpec{Quartic2D{}}, 1.0), ArgumentError);
    CHECK_THROWS_AS(eval_potential(double_well(), Vec2{1.0, 0.0}), ArgumentError);
    const double sextic[] = {0, 0, 0, 0, 0, 1};
    CHECK_THROWS_AS(Polynomial1D::from(sextic), ArgumentError);
  }

  TEST_CASE("gradient values") {
    CHECK(eval_gradient(double_well(), 0.0) == 0.0);
    CHECK(eval_gradient(double_well(), 1.0) == doctest::Approx(0.0));
    // 2 v2 x + 2 v22 x y^2 at (1, 1).
    const Vec2 g = eval_gradient(PotentialSpec{Quartic2D{0.0, 0.5, 0.05, 0.0}}, Vec2{1.0, 1.0});
    CHECK(g.x == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(g.y == doctest::Approx(1.1).epsilon(1e-15));
  }

  TEST_CASE("gradient agrees with central differences to O(h^2)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const double c[] = {0.3, -0.2, -1.0, 0.4, 0.5};
    const PotentialSpec poly = Polynomial1D::from(c);
    for (double h : {1e-3, 1e-4}) {
      for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        const double fd = (eval_potential(poly, x + h) - eval_potential(poly, x - h)) / (2 * h);
        // |V'''| <= 6|c3| + 24 |c4| (|x| + h); error h^2 |V'''| / 6 plus round-off.
        const double third = 6 * std::abs(c[3]) + 24 * std::abs(c[4]) * (std::abs(x) + h);
        const double bound = h * h * third / 6 + 1e-15 * (1 + std::abs(eval_potential(poly, x))) / h;
        CHECK(std::abs(fd - eval_gradient(poly, x)) <= bound * 1.01);
      }
    }
    const PotentialSpec radial = Radial{2, 1.0, 1.0, 1.0};
    for (double r : {0.5, 1.0, 3.0, 10.0}) {
      const double h = 1e-4;
      const double fd = (eval_potential(radial, r + h) - eval_potential(radial, r - h)) / (2 * h);
      CHECK(fd == doctest::Approx(eval_gradient(radial, r)).epsilon(1e-6));
    }
    const PotentialSpec q2 = Quartic2D{0.1, 0.5, 0.05, 0.02};
    for (int i = 0; i < 100; ++i) {
      const Vec2 p{u(rng), u(rng)};
      const double h = 1e-4;
      const Vec2 g = eval_gradient(q2, p);
      const double fx =
          (eval_potential(q2, Vec2{p.x + h, p.y}) - eval_potential(q2, Vec2{p.x - h, p.y})) / (2 * h);
      const double fy =
          (eval_potential(q2, Vec2{p.x, p.y + h}) - eval_potential(q2, Vec2{p.x, p.y - h})) / (2 * h);
      CHECK(std::abs(fx - g.x) < 1e-6);
      CHECK(std::abs(fy - g.y) < 1e-6);
    }
  }

  TEST_CASE("Quartic2D reflection and exchange symmetry is exact") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const PotentialSpec v = Quartic2D{0.3, 0.5, 0.05, 0.01};
    for (int i = 0; i < 10000; ++i) {
      const double x = u(rng);
      const double y = u(rng);
      const double ref = eval_potential(v, Vec2{x, y});
      REQUIRE(eval_potential(v, Vec2{y, x}) == ref);
      REQUIRE(eval_potential(v, Vec2{-x, y}) == ref);
      REQUIRE(eval_potential(v, Vec2{x, -y}) == ref);
    }
  }

  TEST_CASE("radial potential limits") {
    const PotentialSpec v = Radial{1, 1.0, 1.0, 1.0};
    CHECK(eval_potential(v, 1e-6) > 1e11);
    const double far = eval_potential(v, 1e6);
    CHECK(far < 0.0);
    CHECK(far > -1.1e-6);
  }

  TEST_CASE("symmetry validation, 1-D") {
    QuantumActionParams1D fit;
    fit.m_tilde = 0.9961;
    fit.v_tilde = {1.5710, 0.0, -0.745, 0.0, 0.493};
    Uncertainties1D sigma;
    sigma.v_tilde = {0.0, 0.002, 0.0, 0.002, 0.0};
    CHECK(validate_symmetries(fit, sigma, 1e-3).pass);

    fit.v_tilde[1] = 0.5;
    sigma.v_tilde[1] = 0.001;
    const SymmetryReport report = validate_symmetries(fit, sigma, 0.01);
    CHECK_FALSE(report.pass);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].coefficient == "v_tilde_1");
  }

  TEST_CASE("symmetry validation, 2-D cross terms") {
    QuantumActionParams2D fit;
    fit.v_tilde_2 = 0.5;
    fit.v_tilde_22 = 0.0498;
    fit.cross_terms = CrossTerms2D{1e-14, -2e-14, 3e-15, 1.9e-4, -5e-5};
    CHECK(validate_symmetries(fit, Uncertainties2D{}, 1e-3).pass);
    fit.cross_terms->xy = 0.2;
    const auto report = validate_symmetries(fit, Uncertainties2D{}, 1e-3);
    CHECK_FALSE(report.pass);
    CHECK(report.violations.at(0).coefficient == "xy");
  }

  TEST_CASE("classical action maps onto the quantum parameters") {
    ClassicalAction a;
    a.mass = 2.0;
    a.potential = double_well();
    const auto q = QuantumActionParams1D::from_classical(a, 0.5);
    CHECK(q.m_tilde == 2.0);
    CHECK(q.v_tilde[2] == -1.0);
    CHECK(q.v_tilde[4] == 0.5);
    CHECK(q.transition_time.value() == 0.5);
    CHECK(q.potential(1.0) == doctest::Approx(0.0));

    ClassicalAction bad;
    bad.mass = -1.0;
    bad.potential = double_well();
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
  }
}
