#include "qaction/model.hpp"

#include <algorithm>
#include <cmath>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double poly_value(const std::array<double, 5>& c, double x) {
  return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}

double poly_slope(const std::array<double, 5>& c, double x) {
  return ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

double poly_curvature(const std::array<double, 5>& c, double x) {
  return (12.0 * c[4] * x + 6.0 * c[3]) * x + 2.0 * c[2];
}

void require_radial_domain(double r) {
  if (!(r > 0.0)) {
    throw DomainError("radial potential evaluated at r = " + std::to_string(r) +
                      " (requires r > 0)");
  }
}

}  // namespace

void PhysConstants::validate() const {
  if (!(hbar > 0.0) || !(mass_default > 0.0) || !(charge_sq > 0.0)) {
    throw ArgumentError("physical constants must be positive");
  }
}

Polynomial1D Polynomial1D::from(std::span<const double> c) {
  if (c.empty()) throw ArgumentError("polynomial needs at least one coefficient");
  if (c.size() > 5) {
    throw ArgumentError("polynomial degree " + std::to_string(c.size() - 1) +
                        " exceeds the quartic limit");
  }
  Polynomial1D p;
  for (std::size_t k = 0; k < c.size(); ++k) p.coeffs[k] = c[k];
  p.degree = static_cast<int>(c.size()) - 1;
  while (p.degree > 0 && p.coeffs[static_cast<std::size_t>(p.degree)] == 0.0) --p.degree;
  return p;
}

bool Polynomial1D::confining() const {
  if (coeffs[4] > 0.0) return true;
  return coeffs[4] == 0.0 && coeffs[3] == 0.0 && coeffs[2] > 0.0;
}

bool is_two_dimensional(const PotentialSpec& potential) {
  return std::holds_alternative<Quartic2D>(potential);
}

bool is_radial(const PotentialSpec& potential) {
  return std::holds_alternative<Radial>(potential);
}

double eval_potential(const PotentialSpec& potential, double point) {
  return std::visit(
      Overloaded{
          [&](const Polynomial1D& p) { return poly_value(p.coeffs, point); },
          [&](const Radial& r) {
            require_radial_domain(point);
            const double l = r.l;
            return r.hbar * r.hbar * l * (l + 1.0) / (2.0 * r.electron_mass * point * point) -
                   r.charge_sq / point;
          },
          [&](const Quartic2D&) -> double {
            throw ArgumentError("2-D potential evaluated at a scalar point");
          },
      },
      potential);
}

double eval_potential(const PotentialSpec& potential, Vec2 q) {
  const auto* v = std::get_if<Quartic2D>(&potential);
  if (v == nullptr) throw ArgumentError("1-D potential evaluated at a 2-D point");
  const double x2 = q.x * q.x;
  const double y2 = q.y * q.y;
  return v->v0 + v->v2 * (x2 + y2) + v->v22 * (x2 * y2) + v->v4 * (x2 * x2 + y2 * y2);
}

double eval_gradient(const PotentialSpec& potential, double point) {
  return std::visit(
      Overloaded{
          [&](const Polynomial1D& p) { return poly_slope(p.coeffs, point); },
          [&](const Radial& r) {
            require_radial_domain(point);
            const double l = r.l;
            return -r.hbar * r.hbar * l * (l + 1.0) / (r.electron_mass * point * point * point) +
                   r.charge_sq / (point * point);
          },
          [&](const Quartic2D&) -> double {
            throw ArgumentError("2-D potential differentiated at a scalar point");
          },
      },
      potential);
}

Vec2 eval_gradient(const PotentialSpec& potential, Vec2 q) {
  const auto* v = std::get_if<Quartic2D>(&potential);
  if (v == nullptr) throw ArgumentError("1-D potential differentiated at a 2-D point");
  const double x2 = q.x * q.x;
  const double y2 = q.y * q.y;
  return {2.0 * v->v2 * q.x + 2.0 * v->v22 * q.x * y2 + 4.0 * v->v4 * x2 * q.x,
          2.0 * v->v2 * q.y + 2.0 * v->v22 * q.y * x2 + 4.0 * v->v4 * y2 * q.y};
}

double eval_curvature(const PotentialSpec& potential, double point) {
  return std::visit(
      Overloaded{
          [&](const Polynomial1D& p) { return poly_curvature(p.coeffs, point); },
          [&](const Radial& r) {
            require_radial_domain(point);
            const double l = r.l;
            const double r2 = point * point;
            return 3.0 * r.hbar * r.hbar * l * (l + 1.0) / (r.electron_mass * r2 * r2) -
                   2.0 * r.charge_sq / (r2 * point);
          },
          [&](const Quartic2D&) -> double {
            throw ArgumentError("2-D potential has no scalar curvature");
          },
      },
      potential);
}

void ClassicalAction::validate() const {
  if (!(mass > 0.0)) throw ArgumentError("classical mass must be positive");
  if (const auto* r = std::get_if<Radial>(&potential)) {
    if (r->l < 0) throw ArgumentError("angular momentum must be non-negative");
    if (!(r->electron_mass > 0.0) || !(r->hbar > 0.0)) {
      throw ArgumentError("radial potential needs positive mass and hbar");
    }
  }
}

QuantumActionParams1D QuantumActionParams1D::from_classical(const ClassicalAction& action,
                                                            std::optional<double> transition_time) {
  const auto* p = std::get_if<Polynomial1D>(&action.potential);
  if (p == nullptr) throw ArgumentError("1-D quantum action needs a polynomial potential");
  QuantumActionParams1D q;
  q.m_tilde = action.mass;
  q.v_tilde = p->coeffs;
  q.transition_time = transition_time;
  return q;
}

double QuantumActionParams1D::potential(double x) const { return poly_value(v_tilde, x); }
double QuantumActionParams1D::gradient(double x) const { return poly_slope(v_tilde, x); }
double QuantumActionParams1D::curvature(double x) const { return poly_curvature(v_tilde, x); }

void QuantumActionParams1D::validate() const {
  if (!(m_tilde > 0.0)) throw ArgumentError("quantum mass must be positive");
  if (transition_time && !(*transition_time > 0.0)) {
    throw ArgumentError("transition time must be positive");
  }
}

const std::array<const char*, CrossTerms2D::size>& CrossTerms2D::names() {
  static const std::array<const char*, size> n{"xdot_ydot", "xy", "xy3_x3y", "x2y4_x4y2",
                                               "x4y4"};
  return n;
}

std::array<double, CrossTerms2D::size> CrossTerms2D::values() const {
  return {xdot_ydot, xy, xy3_x3y, x2y4_x4y2, x4y4};
}

CrossTerms2D CrossTerms2D::from(const std::array<double, size>& v) {
  return {v[0], v[1], v[2], v[3], v[4]};
}

QuantumActionParams2D QuantumActionParams2D::from_classical(const ClassicalAction& action,
                                                            std::optional<double> transition_time) {
  const auto* v = std::get_if<Quartic2D>(&action.potential);
  if (v == nullptr) throw ArgumentError("2-D quantum action needs a Quartic2D potential");
  QuantumActionParams2D q;
  q.m_tilde = action.mass;
  q.v_tilde_0 = v->v0;
  q.v_tilde_2 = v->v2;
  q.v_tilde_22 = v->v22;
  q.v_tilde_4 = v->v4;
  q.transition_time = transition_time;
  return q;
}

Quartic2D QuantumActionParams2D::canonical_potential() const {
  return {v_tilde_0, v_tilde_2, v_tilde_22, v_tilde_4};
}

double QuantumActionParams2D::potential(Vec2 q) const {
  return eval_potential(PotentialSpec{canonical_potential()}, q);
}

Vec2 QuantumActionParams2D::gradient(Vec2 q) const {
  return eval_gradient(PotentialSpec{canonical_potential()}, q);
}

void QuantumActionParams2D::validate() const {
  if (!(m_tilde > 0.0)) throw ArgumentError("quantum mass must be positive");
  if (transition_time && !(*transition_time > 0.0)) {
    throw ArgumentError("transition time must be positive");
  }
}

SymmetryReport validate_symmetries(const QuantumActionParams1D& params,
                                   const Uncertainties1D& sigma, double tolerance) {
  SymmetryReport report;
  const std::array<std::size_t, 2> odd{1, 3};
  for (std::size_t k : odd) {
    const double bound = std::max(tolerance, sigma.v_tilde[k]);
    if (std::abs(params.v_tilde[k]) > bound) {
      report.pass = false;
      report.violations.push_back({"v_tilde_" + std::to_string(k), params.v_tilde[k], bound});
    }
  }
  return report;
}

SymmetryReport validate_symmetries(const QuantumActionParams2D& params,
                                   const Uncertainties2D& sigma, double tolerance) {
  SymmetryReport report;
  if (!params.cross_terms) return report;
  const auto values = params.cross_terms->values();
  const auto errors = sigma.cross_terms.values();
  for (std::size_t k = 0; k < CrossTerms2D::size; ++k) {
    const double bound = std::max(tolerance, errors[k]);
    if (std::abs(values[k]) > bound) {
      report.pass = false;
      report.violations.push_back({CrossTerms2D::names()[k], values[k], bound});
    }
  }
  return report;
}

}  // namespace qaction
