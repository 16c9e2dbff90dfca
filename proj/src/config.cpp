#include "qaction/config.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

enum class Kind { Number, Integer, Bool, List, Text };

struct KeySpec {
  const char* key;
  Kind kind;
  /// nullptr: no default; the key must be given when it is needed.
  const char* fallback;
};

constexpr std::array kKeys{
    KeySpec{"run.threads", Kind::Integer, "1"},
    KeySpec{"run.out", Kind::Text, "."},
    KeySpec{"physics.hbar", Kind::Number, "1"},
    KeySpec{"physics.charge_sq", Kind::Number, "1"},
    KeySpec{"action.kind", Kind::Text, nullptr},
    KeySpec{"action.mass", Kind::Number, "1"},
    KeySpec{"action.coefficients", Kind::List, nullptr},
    KeySpec{"action.v0", Kind::Number, nullptr},
    KeySpec{"action.v2", Kind::Number, nullptr},
    KeySpec{"action.v22", Kind::Number, nullptr},
    KeySpec{"action.v4", Kind::Number, nullptr},
    KeySpec{"grid.min", Kind::Number, "-10"},
    KeySpec{"grid.max", Kind::Number, "10"},
    KeySpec{"grid.n", Kind::Integer, "1024"},
    KeySpec{"grid2d.min", Kind::Number, "-7"},
    KeySpec{"grid2d.max", Kind::Number, "7"},
    KeySpec{"grid2d.n", Kind::Integer, "96"},
    KeySpec{"grid2d.step_fraction", Kind::Number, "0.001"},
    KeySpec{"boundary.min", Kind::Number, "-2"},
    KeySpec{"boundary.max", Kind::Number, "2"},
    KeySpec{"boundary.count", Kind::Integer, "21"},
    KeySpec{"boundary2d.min", Kind::Number, "-2"},
    KeySpec{"boundary2d.max", Kind::Number, "2"},
    KeySpec{"boundary2d.count", Kind::Integer, "5"},
    KeySpec{"fit.T", Kind::Number, "0.5"},
    KeySpec{"fit.T_list", Kind::List, "0.05, 0.1, 0.25, 0.5, 1, 2, 3, 5"},
    KeySpec{"fit.floor", Kind::Number, "1e-10"},
    KeySpec{"fit.n_t", Kind::Integer, "64"},
    KeySpec{"fit.multi_start", Kind::Integer, "4"},
    KeySpec{"fit.bvp_tol", Kind::Number, "1e-09"},
    KeySpec{"fit.normalization", Kind::Text, "free_particle"},
    KeySpec{"fit.max_iter", Kind::Integer, "200"},
    KeySpec{"fit.gradient_tol", Kind::Number, "1e-08"},
    KeySpec{"fit.step_tol", Kind::Number, "1e-12"},
    KeySpec{"fit.cross_terms", Kind::Bool, "false"},
    KeySpec{"qpotential.floor", Kind::Number, "1e-08"},
    KeySpec{"instanton.tol", Kind::Number, "0.001"},
    KeySpec{"instanton.samples", Kind::Integer, "1001"},
    KeySpec{"chaos.action", Kind::Text, "quantum"},
    KeySpec{"chaos.T", Kind::Number, "4.5"},
    KeySpec{"chaos.energy", Kind::Number, "10"},
    KeySpec{"chaos.n_seeds", Kind::Integer, "16"},
    KeySpec{"chaos.seed", Kind::Integer, "1"},
    KeySpec{"chaos.t_max", Kind::Number, "1000"},
    KeySpec{"chaos.dt", Kind::Number, "0.001"},
    KeySpec{"chaos.subtract_v0", Kind::Bool, "true"},
    KeySpec{"hydrogen.l_max", Kind::Integer, "4"},
    KeySpec{"hydrogen.n_points", Kind::Integer, "2048"},
};

const KeySpec* find_key(const std::string& key) {
  for (const auto& spec : kKeys) {
    if (key == spec.key) return &spec;
  }
  return nullptr;
}

std::string normalize(const KeySpec& spec, const std::string& text) {
  switch (spec.kind) {
    case Kind::Number:
      return format_number(parse_double(text, spec.key));
    case Kind::Integer:
      return std::to_string(parse_integer(text, spec.key));
    case Kind::Bool:
      return parse_bool(text, spec.key) ? "true" : "false";
    case Kind::List: {
      KeyValueDocument tmp;
      tmp.set("x", parse_double_list(text, spec.key));
      return tmp.get("x");
    }
    case Kind::Text:
      if (text.empty()) throw ConfigError(std::string("key '") + spec.key + "' is empty");
      return text;
  }
  return text;
}

class Reader {
 public:
  explicit Reader(const KeyValueDocument& doc) : doc_(doc) {}

  double number(const char* key) const { return parse_double(doc_.get(key), key); }
  std::vector<double> list(const char* key) const { return parse_double_list(doc_.get(key), key); }
  bool flag(const char* key) const { return parse_bool(doc_.get(key), key); }
  const std::string& text(const char* key) const { return doc_.get(key); }

  long long integer(const char* key, long long lo, long long hi) const {
    const long long v = parse_integer(doc_.get(key), key);
    if (v < lo || v > hi) {
      throw ConfigError(std::string("key '") + key + "' = " + std::to_string(v) +
                        " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }

  double positive(const char* key) const {
    const double v = number(key);
    if (!(v > 0.0)) throw ConfigError(std::string("key '") + key + "' must be positive");
    return v;
  }

 private:
  const KeyValueDocument& doc_;
};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

constexpr long long kBig = 1LL << 40;

}  // namespace

std::string RunConfig::hash() const { return fnv1a_hex(echo_.canonical_text()); }

RunConfig parse_run_config(const KeyValueDocument& doc) {
  KeyValueDocument merged;
  for (const auto& spec : kKeys) {
    if (spec.fallback) merged.set(spec.key, std::string(spec.fallback));
  }
  for (const auto& [key, value] : doc.entries()) {
    if (key == "config_hash") continue;
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError("unknown key '" + key + "'");
    merged.set(key, normalize(*spec, value));
  }

  const Reader r(merged);
  RunConfig c;
  c.threads = static_cast<std::size_t>(r.integer("run.threads", 0, 1024));
  c.out = r.text("run.out");

  c.constants.hbar = r.positive("physics.hbar");
  c.constants.charge_sq = r.positive("physics.charge_sq");
  c.constants.mass_default = r.positive("action.mass");

  // The action is never defaulted: coefficients must be spelled out.
  const bool has_polynomial = merged.contains("action.coefficients");
  const std::array<const char*, 4> quartic_keys{"action.v0", "action.v2", "action.v22", "action.v4"};
  bool has_quartic = false;
  for (const char* key : quartic_keys) has_quartic = has_quartic || merged.contains(key);
  c.action.mass = c.constants.mass_default;
  if (merged.contains("action.kind")) {
    c.action_kind = r.text("action.kind");
    if (c.action_kind == "polynomial") {
      if (!has_polynomial) throw ConfigError("action.kind = polynomial needs action.coefficients");
      if (has_quartic) throw ConfigError("action.v* keys belong to action.kind = quartic2d");
      const auto coefficients = r.list("action.coefficients");
      if (coefficients.size() > 5) throw ConfigError("action.coefficients: degree above 4");
      c.action.potential = Polynomial1D::from(coefficients);
    } else if (c.action_kind == "quartic2d") {
      if (has_polynomial) throw ConfigError("action.coefficients belongs to action.kind = polynomial");
      for (const char* key : quartic_keys) {
        if (!merged.contains(key)) {
          throw ConfigError(std::string("action.kind = quartic2d needs ") + key);
        }
      }
      c.action.potential = Quartic2D{r.number("action.v0"), r.number("action.v2"),
                                     r.number("action.v22"), r.number("action.v4")};
    } else {
      throw ConfigError("action.kind must be 'polynomial' or 'quartic2d', got '" + c.action_kind +
                        "'");
    }
  } else if (has_polynomial || has_quartic) {
    throw ConfigError("action coefficients given without action.kind");
  }

  c.grid = {r.number("grid.min"), r.number("grid.max"),
            static_cast<std::size_t>(r.integer("grid.n", 16, kBig))};
  c.grid2d = {r.number("grid2d.min"), r.number("grid2d.max"),
              static_cast<std::size_t>(r.integer("grid2d.n", 64, 4096))};
  c.step_fraction_2d = r.positive("grid2d.step_fraction");
  if (c.step_fraction_2d > 1e-3) throw ConfigError("grid2d.step_fraction must not exceed 1e-3");
  if (!(c.grid.x_min < c.grid.x_max) || !(c.grid2d.min < c.grid2d.max)) {
    throw ConfigError("grid bounds must satisfy min < max");
  }

  c.boundary = linspace(r.number("boundary.min"), r.number("boundary.max"),
                        static_cast<std::size_t>(r.integer("boundary.count", 2, 10000)));
  const auto axis = linspace(r.number("boundary2d.min"), r.number("boundary2d.max"),
                             static_cast<std::size_t>(r.integer("boundary2d.count", 2, 100)));
  for (double x : axis) {
    for (double y : axis) c.boundary2d.push_back({x, y});
  }

  c.T = r.positive("fit.T");
  c.T_list = r.list("fit.T_list");
  for (std::size_t k = 0; k < c.T_list.size(); ++k) {
    if (!(c.T_list[k] > 0.0) || (k > 0 && !(c.T_list[k] > c.T_list[k - 1]))) {
      throw ConfigError("fit.T_list must be positive and strictly ascending");
    }
  }
  lsq::Settings optimizer;
  optimizer.max_iter = static_cast<std::size_t>(r.integer("fit.max_iter", 1, 100000));
  optimizer.gradient_tol = r.positive("fit.gradient_tol");
  optimizer.step_tol = r.positive("fit.step_tol");
  Normalization normalization;
  try {
    normalization = parse_normalization(r.text("fit.normalization"));
  } catch (const Error& e) {
    throw ConfigError(std::string("fit.normalization: ") + e.what());
  }
  c.fit.boundary_grid = c.boundary;
  c.fit.floor = r.positive("fit.floor");
  c.fit.optimizer = optimizer;
  c.fit.n_t = static_cast<std::size_t>(r.integer("fit.n_t", 8, 100000));
  c.fit.multi_start = static_cast<std::size_t>(r.integer("fit.multi_start", 1, 1000));
  c.fit.bvp_tol = r.positive("fit.bvp_tol");
  c.fit.hbar = c.constants.hbar;
  c.fit.normalization = normalization;

  c.fit2d.boundary_points = c.boundary2d;
  c.fit2d.floor = c.fit.floor;
  c.fit2d.optimizer = optimizer;
  c.fit2d.n_t = c.fit.n_t;
  c.fit2d.bvp_tol = c.fit.bvp_tol;
  c.fit2d.hbar = c.constants.hbar;
  c.fit2d.normalization = normalization;
  c.fit2d.cross_terms = r.flag("fit.cross_terms");

  c.qpotential_floor = r.positive("qpotential.floor");
  c.instanton_tol = r.positive("instanton.tol");
  c.instanton_samples = static_cast<std::size_t>(r.integer("instanton.samples", 3, 10000000));

  c.chaos_action = r.text("chaos.action");
  if (c.chaos_action != "quantum" && c.chaos_action != "classical") {
    throw ConfigError("chaos.action must be 'quantum' or 'classical'");
  }
  c.chaos_T = r.positive("chaos.T");
  c.chaos.energy = r.number("chaos.energy");
  c.chaos.n_seeds = static_cast<std::size_t>(r.integer("chaos.n_seeds", 1, 1000000));
  c.chaos.seed = static_cast<std::uint64_t>(r.integer("chaos.seed", 0, kBig));
  c.chaos.t_max = r.positive("chaos.t_max");
  c.chaos.dt = r.positive("chaos.dt");
  c.chaos.subtract_v0 = r.flag("chaos.subtract_v0");

  c.hydrogen_l_max = static_cast<int>(r.integer("hydrogen.l_max", 1, 50));
  c.hydrogen_points = static_cast<std::size_t>(r.integer("hydrogen.n_points", 64, 100000));

  for (const auto& [key, value] : merged.entries()) {
    if (key.rfind("run.", 0) != 0) c.echo_.set(key, value);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_run_config(KeyValueDocument::parse(is));
}

void write_config_header(std::ostream& os, const RunConfig& config) {
  for (const auto& [key, value] : config.echo().entries()) {
    os << "# " << key << " = " << value << '\n';
  }
  os << "# config_hash = " << config.hash() << '\n';
}

KeyValueDocument read_config_header(std::istream& is) {
  std::string text;
  std::string line;
  while (is.peek() == '#' && std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) break;
    text += line.substr(2) + '\n';
    if (line.rfind("# config_hash", 0) == 0) break;
  }
  return KeyValueDocument::parse_text(text);
}

}  // namespace qaction
