#include "qaction/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "qaction/errors.hpp"
#include "qaction/linalg.hpp"
#include "qaction/report.hpp"

namespace qaction {

namespace {

constexpr double kTruncation = 1e-16;
constexpr double kWallFraction = 0.02;
constexpr double kWallMass = 1e-6;

void require_inside(const GridSpec1D& grid, double x) {
  if (!(x > grid.x_min && x < grid.x_max)) {
    throw DomainError("point " + format_number(x) + " outside the grid interior (" +
                      format_number(grid.x_min) + ", " + format_number(grid.x_max) + ")");
  }
}

}  // namespace

void GridSpec1D::validate() const {
  if (!(x_min < x_max)) throw ArgumentError("grid needs x_min < x_max");
  if (n_points < 64) throw ArgumentError("grid needs at least 64 points");
}

Eigen::MatrixXd sine_dvr_kinetic(const GridSpec1D& grid, double mass, double hbar) {
  const std::size_t n_int = grid.n_points - 1;
  const auto m = static_cast<Eigen::Index>(grid.interior());
  const double nn = static_cast<double>(n_int);
  const double pre =
      hbar * hbar / (2.0 * mass) * std::pow(std::numbers::pi / grid.length(), 2) * 0.5;
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double i = static_cast<double>(a + 1);
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double j = static_cast<double>(b + 1);
      double v;
      if (a == b) {
        const double s = std::sin(std::numbers::pi * i / nn);
        v = pre * ((2.0 * nn * nn + 1.0) / 3.0 - 1.0 / (s * s));
      } else {
        const double sm = std::sin(std::numbers::pi * (i - j) / (2.0 * nn));
        const double sp = std::sin(std::numbers::pi * (i + j) / (2.0 * nn));
        const double sign = ((a - b) % 2 == 0) ? 1.0 : -1.0;
        v = pre * sign * (1.0 / (sm * sm) - 1.0 / (sp * sp));
      }
      k(a, b) = v;
      k(b, a) = v;
    }
  }
  return k;
}

SineBasis::SineBasis(const GridSpec1D& grid) : grid_(grid) {
  const auto m = static_cast<Eigen::Index>(grid.interior());
  const double nn = static_cast<double>(grid.n_points - 1);
  const double norm = std::sqrt(2.0 / nn);
  transform_.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k <= i; ++k) {
      const double v =
          norm * std::sin(std::numbers::pi * static_cast<double>((i + 1) * (k + 1)) / nn);
      transform_(i, k) = v;
      transform_(k, i) = v;
    }
  }
}

Eigen::VectorXd SineBasis::modes(double x) const {
  require_inside(grid_, x);
  const std::size_t m = grid_.interior();
  const double length = grid_.length();
  const double theta = std::numbers::pi * (x - grid_.x_min) / length;
  const double norm = std::sqrt(2.0 / length);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    b(static_cast<Eigen::Index>(k)) = norm * std::sin(static_cast<double>(k + 1) * theta);
  }
  return b;
}

Eigen::VectorXd SineBasis::interpolation_weights(double x) const {
  return transform_ * (modes(x) * std::sqrt(grid_.spacing()));
}

SpectralDecomposition::SpectralDecomposition(GridSpec1D grid, ClassicalAction action, double hbar,
                                             Eigen::VectorXd energies,
                                             Eigen::MatrixXd interior_vectors)
    : grid_(grid),
      action_(std::move(action)),
      hbar_(hbar),
      energies_(std::move(energies)),
      vectors_(std::move(interior_vectors)),
      basis_(grid_),
      coeffs_(basis_.transform() * vectors_) {}

Eigen::VectorXd SpectralDecomposition::eigenfunctions_at(double x) const {
  // On node i this reduces to U_{in} / sqrt(dx).
  return coeffs_.transpose() * basis_.modes(x);
}

std::vector<double> SpectralDecomposition::eigenfunction_on_grid(std::size_t n) const {
  if (n >= n_states()) throw ArgumentError("eigenfunction index out of range");
  std::vector<double> out(grid_.n_points, 0.0);
  const double scale = 1.0 / std::sqrt(grid_.spacing());
  for (std::size_t i = 0; i < grid_.interior(); ++i) {
    out[i + 1] = vectors_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) * scale;
  }
  return out;
}

SpectralDecomposition spectral_decompose(const ClassicalAction& action, const GridSpec1D& grid,
                                         std::size_t n_states, const DecomposeOptions& options) {
  grid.validate();
  action.validate();
  if (is_two_dimensional(action.potential)) {
    throw ArgumentError("spectral_decompose handles 1-D and radial potentials only");
  }
  const std::size_t m = grid.interior();
  if (n_states > m) throw ArgumentError("more states requested than interior grid points");

  Eigen::MatrixXd h = sine_dvr_kinetic(grid, action.mass, options.hbar);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    h(ii, ii) += eval_potential(action.potential, grid.node(i + 1));
  }
  linalg::EigenPairs pairs = linalg::symmetric_eigen(h, n_states);

  // Sign convention: ground state positive, others with positive largest component.
  for (Eigen::Index n = 0; n < pairs.vectors.cols(); ++n) {
    auto col = pairs.vectors.col(n);
    double sign;
    if (n == 0) {
      sign = col.sum() >= 0.0 ? 1.0 : -1.0;
    } else {
      Eigen::Index arg = 0;
      col.cwiseAbs().maxCoeff(&arg);
      sign = col(arg) >= 0.0 ? 1.0 : -1.0;
    }
    col *= sign;
  }

  if (options.require_confinement) {
    const auto edge = static_cast<Eigen::Index>(
        std::max<std::size_t>(2, static_cast<std::size_t>(kWallFraction * static_cast<double>(m))));
    const auto ground = pairs.vectors.col(0);
    const double upper = ground.tail(edge).squaredNorm();
    const double lower = is_radial(action.potential) ? 0.0 : ground.head(edge).squaredNorm();
    if (upper > kWallMass || lower > kWallMass) {
      throw BoxTooSmallError("ground state mass near the walls is " +
                             format_number(std::max(upper, lower)) + " (> 1e-6); enlarge the box");
    }
  }
  return SpectralDecomposition(grid, action, options.hbar, std::move(pairs.values),
                               std::move(pairs.vectors));
}

namespace {

/// Spectral weights exp(-(E_n - E_0) T / hbar), truncated at kTruncation.
std::vector<double> spectral_weights(const SpectralDecomposition& decomp, double T) {
  if (!(T > 0.0)) throw ArgumentError("transition time must be positive");
  const auto& e = decomp.energies();
  std::vector<double> w;
  for (Eigen::Index n = 0; n < e.size(); ++n) {
    const double weight = std::exp(-(e(n) - e(0)) * T / decomp.hbar());
    if (weight < kTruncation) return w;
    w.push_back(weight);
  }
  if (decomp.n_states() < decomp.grid().interior()) {
    throw ArgumentError("decomposition truncated at " + std::to_string(decomp.n_states()) +
                        " states; T = " + format_number(T) + " needs more");
  }
  return w;
}

}  // namespace

double euclidean_amplitude(const SpectralDecomposition& decomp, double x_i, double x_f, double T) {
  const std::vector<double> w = spectral_weights(decomp, T);
  const Eigen::VectorXd a = decomp.eigenfunctions_at(x_i);
  const Eigen::VectorXd b = decomp.eigenfunctions_at(x_f);
  double sum = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const auto nn = static_cast<Eigen::Index>(n);
    sum += a(nn) * w[n] * b(nn);
  }
  return sum * std::exp(-decomp.energies()(0) * T / decomp.hbar());
}

AmplitudeTable amplitude_table(const SpectralDecomposition& decomp,
                               std::span<const double> boundary_grid, double T, double floor,
                               const WorkerPool* pool) {
  const std::vector<double> w = spectral_weights(decomp, T);
  const std::size_t nb = boundary_grid.size();
  const auto ns = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(nb), ns);
  parallel_for(pool, nb, [&](std::size_t i) {
    phi.row(static_cast<Eigen::Index>(i)) = decomp.eigenfunctions_at(boundary_grid[i]).head(ns);
  });
  const Eigen::Map<const Eigen::VectorXd> weights(w.data(), ns);
  const double scale = std::exp(-decomp.energies()(0) * T / decomp.hbar());
  const Eigen::MatrixXd g = phi * weights.asDiagonal() * phi.transpose() * scale;

  double g_max = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = i; j < nb; ++j) {
      g_max = std::max(g_max, g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  AmplitudeTable table;
  table.transition_time = T;
  table.floor = floor;
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = i; j < nb; ++j) {
      const double v = g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v > floor * g_max) {
        table.pairs.emplace_back(boundary_grid[i], boundary_grid[j]);
        table.values.push_back(v);
      }
    }
  }
  if (table.values.empty()) {
    throw DegenerateTableError("every amplitude fell below the relative floor " +
                               format_number(floor));
  }
  return table;
}

GroundState ground_state(const SpectralDecomposition& decomp) {
  GroundState gs;
  gs.grid = decomp.grid();
  gs.E_gr = decomp.energies()(0);
  gs.psi = decomp.eigenfunction_on_grid(0);
  return gs;
}

void write_amplitude_csv(std::ostream& os, const AmplitudeTable& table) {
  os << "x_i,x_f,T,G\n";
  for (std::size_t p = 0; p < table.size(); ++p) {
    os << format_number(table.pairs[p].first) << ',' << format_number(table.pairs[p].second) << ','
       << format_number(table.transition_time) << ',' << format_number(table.values[p]) << '\n';
  }
}

AmplitudeTable read_amplitude_csv(std::istream& is) {
  AmplitudeTable table;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "x_i,x_f,T,G") throw ConfigError("unexpected amplitude CSV header: " + line);
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell[4];
    for (auto& c : cell) {
      if (!std::getline(row, c, ',')) throw ConfigError("short amplitude CSV row: " + line);
    }
    table.pairs.emplace_back(parse_double(cell[0], "x_i"), parse_double(cell[1], "x_f"));
    table.transition_time = parse_double(cell[2], "T");
    table.values.push_back(parse_double(cell[3], "G"));
  }
  return table;
}

void write_ground_state_csv(std::ostream& os, const GroundState& gs) {
  os << "x,psi\n";
  for (std::size_t k = 0; k < gs.psi.size(); ++k) {
    os << format_number(gs.grid.node(k)) << ',' << format_number(gs.psi[k]) << '\n';
  }
}

}  // namespace qaction
