#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include "qaction/errors.hpp"
#include "qaction/propagator.hpp"
#include "qaction/report.hpp"

namespace qaction {

namespace {

struct Canonical {
  Vec2 source;
  Vec2 target;
};

/// Maps (s, f) by the element of the reflection/exchange group that puts s in 0 <= y <= x.
Canonical canonicalize(Vec2 s, Vec2 f) {
  if (s.x < 0.0) {
    s.x = -s.x;
    f.x = -f.x;
  }
  if (s.y < 0.0) {
    s.y = -s.y;
    f.y = -f.y;
  }
  if (s.y > s.x) {
    std::swap(s.x, s.y);
    std::swap(f.x, f.y);
  }
  return {s, f};
}

class SplitStepPropagator {
 public:
  SplitStepPropagator(const ClassicalAction& action, const GridSpec2D& grid, double T,
                      const Propagation2DOptions& options)
      : axis_(grid.axis()), basis_(axis_), hbar_(options.hbar) {
    const auto m = static_cast<Eigen::Index>(axis_.interior());
    steps_ = static_cast<std::size_t>(std::ceil(1.0 / options.max_step_fraction - 1e-9));
    dt_ = T / static_cast<double>(steps_);

    const double length = axis_.length();
    Eigen::VectorXd decay(m);
    for (Eigen::Index n = 0; n < m; ++n) {
      const double k = static_cast<double>(n + 1) * std::numbers::pi / length;
      decay(n) = std::exp(-hbar_ * k * k * dt_ / (2.0 * action.mass));
    }
    const Eigen::MatrixXd& s = basis_.transform();
    kinetic_ = s * decay.asDiagonal() * s;

    half_potential_.resize(m, m);
    full_potential_.resize(m, m);
    double v_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const Vec2 q{axis_.node(static_cast<std::size_t>(i) + 1),
                     axis_.node(static_cast<std::size_t>(j) + 1)};
        const double v = eval_potential(action.potential, q);
        v_min = std::min(v_min, v);
        half_potential_(i, j) = std::exp(-v * dt_ / (2.0 * hbar_));
        full_potential_(i, j) = std::exp(-v * dt_ / hbar_);
      }
    }
    growth_bound_ = std::exp(std::max(0.0, -v_min) * 1.5 * dt_ / hbar_) * (1.0 + 1e-9);
  }

  /// exp(-H T / hbar) applied to the band-limited delta at `source`.
  Eigen::MatrixXd propagate(Vec2 source) const {
    const double dx = axis_.spacing();
    const Eigen::VectorXd wx = basis_.interpolation_weights(source.x);
    const Eigen::VectorXd wy = basis_.interpolation_weights(source.y);
    Eigen::MatrixXd psi = (wx * wy.transpose()) / (dx * dx);
    psi = psi.cwiseProduct(half_potential_);
    double norm = psi.norm();
    for (std::size_t step = 0; step < steps_; ++step) {
      psi = kinetic_ * psi * kinetic_;
      psi = psi.cwiseProduct(step + 1 == steps_ ? half_potential_ : full_potential_);
      const double next = psi.norm();
      if (!std::isfinite(next) || next > norm * growth_bound_) {
        throw IntegrationError("imaginary-time norm grew at step " + std::to_string(step) +
                               "; reduce the time step");
      }
      norm = next;
    }
    return psi;
  }

  double evaluate(const Eigen::MatrixXd& psi, Vec2 target) const {
    const Eigen::VectorXd wx = basis_.interpolation_weights(target.x);
    const Eigen::VectorXd wy = basis_.interpolation_weights(target.y);
    return wx.dot(psi * wy);
  }

 private:
  GridSpec1D axis_;
  SineBasis basis_;
  double hbar_;
  std::size_t steps_ = 0;
  double dt_ = 0.0;
  double growth_bound_ = 1.0;
  Eigen::MatrixXd kinetic_;
  Eigen::MatrixXd half_potential_;
  Eigen::MatrixXd full_potential_;
};

}  // namespace

void GridSpec2D::validate() const {
  if (!(min < max)) throw ArgumentError("2-D grid needs min < max");
  if (n_points < 64) throw ArgumentError("2-D grid needs at least 64x64 points");
}

std::vector<double> euclidean_amplitude_2d(const ClassicalAction& action, const GridSpec2D& grid,
                                           std::span<const PointPair2D> points, double T,
                                           const Propagation2DOptions& options,
                                           const WorkerPool* pool) {
  grid.validate();
  action.validate();
  if (!is_two_dimensional(action.potential)) {
    throw ArgumentError("euclidean_amplitude_2d needs a Quartic2D potential");
  }
  if (!(T > 0.0)) throw ArgumentError("transition time must be positive");
  if (!(options.max_step_fraction > 0.0) || options.max_step_fraction > 1e-3) {
    throw ArgumentError("2-D time step must not exceed 1e-3 T");
  }

  const bool symmetric_box = grid.min == -grid.max;
  std::vector<Canonical> mapped;
  mapped.reserve(points.size());
  for (const auto& p : points) {
    mapped.push_back(symmetric_box ? canonicalize(p.initial, p.final)
                                   : Canonical{p.initial, p.final});
  }

  // Distinct sources in first-seen order.
  std::vector<Vec2> sources;
  std::vector<std::size_t> source_of(points.size());
  std::map<std::pair<double, double>, std::size_t> index;
  for (std::size_t p = 0; p < mapped.size(); ++p) {
    const auto key = std::make_pair(mapped[p].source.x, mapped[p].source.y);
    auto [it, inserted] = index.emplace(key, sources.size());
    if (inserted) sources.push_back(mapped[p].source);
    source_of[p] = it->second;
  }

  const SplitStepPropagator propagator(action, grid, T, options);
  std::vector<double> out(points.size());
  parallel_for(pool, sources.size(), [&](std::size_t s) {
    const Eigen::MatrixXd psi = propagator.propagate(sources[s]);
    for (std::size_t p = 0; p < mapped.size(); ++p) {
      if (source_of[p] == s) out[p] = propagator.evaluate(psi, mapped[p].target);
    }
  });
  return out;
}

AmplitudeTable2D amplitude_table_2d(const ClassicalAction& action, const GridSpec2D& grid,
                                    std::span<const Vec2> boundary_points, double T, double floor,
                                    const Propagation2DOptions& options, const WorkerPool* pool) {
  std::vector<PointPair2D> all;
  for (std::size_t i = 0; i < boundary_points.size(); ++i) {
    for (std::size_t j = i; j < boundary_points.size(); ++j) {
      all.push_back({boundary_points[i], boundary_points[j]});
    }
  }
  const std::vector<double> g = euclidean_amplitude_2d(action, grid, all, T, options, pool);
  const double g_max = g.empty() ? 0.0 : *std::max_element(g.begin(), g.end());
  AmplitudeTable2D table;
  table.transition_time = T;
  table.floor = floor;
  for (std::size_t p = 0; p < all.size(); ++p) {
    if (g[p] > floor * g_max) {
      table.pairs.push_back(all[p]);
      table.values.push_back(g[p]);
    }
  }
  if (table.values.empty()) {
    throw DegenerateTableError("every 2-D amplitude fell below the relative floor " +
                               format_number(floor));
  }
  return table;
}

}  // namespace qaction
