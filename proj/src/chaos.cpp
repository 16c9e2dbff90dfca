#include "qaction/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double axis_potential(const QuantumActionParams2D& p, double x) { return p.potential({x, 0.0}); }

/// Half-width of the region V(x, 0) < E on the x axis; zero when empty. A
/// slightly negative fitted v4 is accepted while E stays below the axis barrier.
double axis_extent(const QuantumActionParams2D& p, double energy) {
  const double c = p.v_tilde_0 - energy;
  if (p.v_tilde_4 == 0.0) {
    if (!(p.v_tilde_2 > 0.0)) throw ArgumentError("potential is not confining on the x axis");
    return c < 0.0 ? std::sqrt(-c / p.v_tilde_2) : 0.0;
  }
  const double disc = p.v_tilde_2 * p.v_tilde_2 - 4.0 * p.v_tilde_4 * c;
  if (p.v_tilde_4 < 0.0 && !(p.v_tilde_2 > 0.0 && disc > 0.0)) {
    throw ArgumentError("E = " + format_number(energy) +
                        " is not below the axis barrier of a potential with v4 < 0");
  }
  if (disc < 0.0) return 0.0;
  // Smallest positive root in s = x^2 of v4 s^2 + v2 s + c for either sign of v4.
  const double s = (-p.v_tilde_2 + std::sqrt(disc)) / (2.0 * p.v_tilde_4);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

struct Hermite {
  double f0, f1, d0, d1, h;
  double operator()(double s) const {
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * f1 +
           (s3 - s2) * h * d1;
  }
};

/// Root of the cubic Hermite interpolant of y on [0, 1], given y0 < 0 <= y1.
double crossing_fraction(const Hermite& y) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (y(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SectionTrajectory trace(const QuantumActionParams2D& params, const FlowSample& initial,
                        double t_max, double dt) {
  SectionTrajectory out;
  LeapfrogFlow flow(params, initial, dt);
  const double m = flow.mass();
  const double e0 = flow.state().energy;
  const double scale = e0 != 0.0 ? std::abs(e0) : 1.0;
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  for (std::size_t s = 0; s < steps; ++s) {
    const FlowSample a = flow.state();
    const Vec2 fa = flow.force();
    flow.step();
    const FlowSample& b = flow.state();
    const double drift = std::abs(b.energy - e0) / scale;
    if (!(drift <= kMaxEnergyDrift)) {
      out.aborted = true;
      out.reason = "relative energy drift " + format_number(drift) + " at t = " + format_number(b.t);
      return out;
    }
    if (a.q.y < 0.0 && b.q.y >= 0.0) {
      const Vec2 fb = flow.force();
      const double tau = crossing_fraction({a.q.y, b.q.y, a.p.y / m, b.p.y / m, dt});
      const Hermite x{a.q.x, b.q.x, a.p.x / m, b.p.x / m, dt};
      const Hermite px{a.p.x, b.p.x, fa.x, fb.x, dt};
      const Hermite py{a.p.y, b.p.y, fa.y, fb.y, dt};
      SectionPoint point;
      point.x = x(tau);
      point.px = px(tau);
      point.energy = hamiltonian(params, {point.x, 0.0}, {point.px, py(tau)});
      out.points.push_back(point);
    }
  }
  return out;
}

}  // namespace

QuantumActionParams2D SectionConfig::flow_params() const {
  QuantumActionParams2D p = params;
  if (subtract_v0) p.v_tilde_0 = 0.0;
  return p;
}

void SectionConfig::validate() const {
  params.validate();
  if (n_seeds == 0) throw ArgumentError("n_seeds must be at least 1");
  if (!(t_max > 0.0) || !(dt > 0.0)) throw ArgumentError("need t_max > 0 and dt > 0");
  if (params.v_tilde_2 > 0.0) {
    const double period =
        2.0 * std::numbers::pi / std::sqrt(2.0 * params.v_tilde_2 / params.m_tilde);
    if (dt > 1e-3 * period) {
      throw ArgumentError("dt = " + format_number(dt) + " exceeds 1e-3 of the oscillation period " +
                          format_number(period));
    }
  }
}

std::vector<FlowSample> seed_energy_shell(const QuantumActionParams2D& params, double energy,
                                          std::size_t n, std::uint64_t seed) {
  params.validate();
  const double half_width = axis_extent(params, energy);
  if (!(half_width > 0.0)) {
    throw EnergyTooLowError("E = " + format_number(energy) +
                            " leaves no allowed region on the section");
  }
  std::mt19937_64 rng(seed);
  const double m = params.m_tilde;
  std::vector<FlowSample> states;
  states.reserve(n);
  std::size_t rejected = 0;
  while (states.size() < n) {
    const double x = half_width * (2.0 * uniform01(rng) - 1.0);
    const double kinetic = 2.0 * m * (energy - axis_potential(params, x));
    if (!(kinetic > 0.0)) {
      if (++rejected > 1000 * (n + 1)) {
        throw EnergyTooLowError("allowed region on the section has negligible measure");
      }
      continue;
    }
    const double p_max = std::sqrt(kinetic);
    const double px = p_max * (2.0 * uniform01(rng) - 1.0);
    FlowSample s;
    s.q = {x, 0.0};
    s.p = {px, std::sqrt(std::max(0.0, kinetic - px * px))};
    s.energy = hamiltonian(params, s.q, s.p);
    states.push_back(s);
  }
  return states;
}

std::size_t PoincareSection::n_points() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.points.size();
  return n;
}

double PoincareSection::max_energy_error() const {
  const double e = config.energy;
  const double scale = e != 0.0 ? std::abs(e) : 1.0;
  double worst = 0.0;
  for (const auto& t : trajectories) {
    for (const auto& p : t.points) worst = std::max(worst, std::abs(p.energy - e) / scale);
  }
  return worst;
}

PoincareSection poincare_section(const SectionConfig& config, const WorkerPool* pool) {
  config.validate();
  const auto seeds =
      seed_energy_shell(config.flow_params(), config.energy, config.n_seeds, config.seed);
  return poincare_section(config, seeds, pool);
}

PoincareSection poincare_section(const SectionConfig& config,
                                 const std::vector<FlowSample>& initial, const WorkerPool* pool) {
  config.validate();
  const QuantumActionParams2D params = config.flow_params();
  PoincareSection section;
  section.config = config;
  section.trajectories.resize(initial.size());
  parallel_for(pool, initial.size(), [&](std::size_t i) {
    section.trajectories[i] = trace(params, initial[i], config.t_max, config.dt);
  });
  return section;
}

KeyValueDocument to_document(const SectionConfig& config) {
  KeyValueDocument doc;
  const auto& p = config.params;
  doc.set("section.m_tilde", p.m_tilde);
  doc.set("section.v_tilde_0", p.v_tilde_0);
  doc.set("section.v_tilde_2", p.v_tilde_2);
  doc.set("section.v_tilde_22", p.v_tilde_22);
  doc.set("section.v_tilde_4", p.v_tilde_4);
  if (p.transition_time) doc.set("section.T", *p.transition_time);
  doc.set("section.energy", config.energy);
  doc.set("section.n_seeds", static_cast<double>(config.n_seeds));
  doc.set("section.seed", std::to_string(config.seed));
  doc.set("section.t_max", config.t_max);
  doc.set("section.dt", config.dt);
  doc.set("section.subtract_v0", config.subtract_v0);
  doc.set("section.plane", std::string("y=0, ydot>0"));
  return doc;
}

void write_section_csv(std::ostream& os, const PoincareSection& section) {
  const KeyValueDocument doc = to_document(section.config);
  for (const auto& [key, value] : doc.entries()) {
    os << "# " << key << " = " << value << '\n';
  }
  for (std::size_t i = 0; i < section.trajectories.size(); ++i) {
    const auto& t = section.trajectories[i];
    if (t.aborted) os << "# trajectory " << i << " aborted: " << t.reason << '\n';
  }
  os << "trajectory_id,crossing_index,x,px,H\n";
  for (std::size_t i = 0; i < section.trajectories.size(); ++i) {
    const auto& points = section.trajectories[i].points;
    for (std::size_t k = 0; k < points.size(); ++k) {
      os << i << ',' << k << ',' << format_number(points[k].x) << ','
         << format_number(points[k].px) << ',' << format_number(points[k].energy) << '\n';
    }
  }
}

}  // namespace qaction
