#include "pmeobs/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "pmeobs/fixtures.hpp"
#include "pmeobs/io.hpp"

namespace pmeobs {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
  }
}

std::string join(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(join(where, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(where, key), "must be finite");
  return x;
}

long long get_integer(const json& obj, const std::string& where, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(where, key), "expected an integer");
  return v.get<long long>();
}

void require_positive(double x, const std::string& field) {
  if (!(x > 0.0)) throw ConfigError(field, "must be positive");
}

GridSpec parse_grid(const json& g, const std::string& where, const GridSpec& fallback) {
  if (!g.is_object()) throw ConfigError(where, "expected an object");
  reject_unknown(g, where, {"d", "nx", "ny", "nt", "T", "dt"});
  GridSpec s = fallback;
  s.d = static_cast<int>(get_integer(g, where, "d", s.d));
  if (s.d != 1 && s.d != 2) throw ConfigError(join(where, "d"), "must be 1 or 2");
  s.nx = get_integer(g, where, "nx", s.nx);
  if (s.nx < 1) throw ConfigError(join(where, "nx"), "must be >= 1");
  s.ny = get_integer(g, where, "ny", s.d == 2 ? (s.ny > 0 ? s.ny : s.nx) : 0);
  if (s.d == 2 && s.ny < 1) throw ConfigError(join(where, "ny"), "must be >= 1");
  s.T = get_number(g, where, "T", s.T);
  require_positive(s.T, join(where, "T"));
  if (g.contains("dt")) {
    const double dt = get_number(g, where, "dt", 0.0);
    require_positive(dt, join(where, "dt"));
    const double steps = s.T / dt;
    const long long nt = std::llround(steps);
    if (nt < 1 || std::abs(steps - static_cast<double>(nt)) > 1e-9 * steps)
      throw ConfigError(join(where, "dt"), "T must be an integer multiple of dt");
    if (g.contains("nt") && get_integer(g, where, "nt", 0) != nt)
      throw ConfigError(join(where, "dt"), "inconsistent with nt");
    s.nt = nt;
  } else {
    s.nt = get_integer(g, where, "nt", s.nt);
  }
  if (s.nt < 1) throw ConfigError(join(where, "nt"), "must be >= 1");
  return s;
}

/// The config grid coarsened once when that is exact, else the grid itself.
GridSpec default_base(const GridSpec& g) {
  GridSpec b = g;
  const bool even = g.nx % 2 == 1 && (g.d == 1 || g.ny % 2 == 1) && g.nt % 2 == 0;
  if (even && g.nx > 1 && g.nt > 1) {
    b.nx = (g.nx + 1) / 2;
    if (g.d == 2) b.ny = (g.ny + 1) / 2;
    b.nt = g.nt / 2;
  }
  return b;
}

ObstacleSpec parse_obstacle(const json& o, const std::filesystem::path& base_dir) {
  const std::string where = "obstacle";
  if (!o.is_object()) throw ConfigError(where, "expected an object");
  reject_unknown(o, where, {"kind", "amplitude", "center", "radius", "window", "table", "compact_support"});
  ObstacleSpec s;
  if (o.contains("kind")) {
    if (!o.at("kind").is_string()) throw ConfigError("obstacle.kind", "expected a string");
    s.kind = o.at("kind").get<std::string>();
  }
  static const std::set<std::string> kinds{"zero", "constant", "bump", "product-bump", "custom-table"};
  if (!kinds.count(s.kind))
    throw ConfigError("obstacle.kind", "must be one of zero, constant, bump, product-bump, custom-table");
  s.amplitude = get_number(o, where, "amplitude", s.amplitude);
  if (s.amplitude < 0.0) throw ConfigError("obstacle.amplitude", "must be >= 0");
  if (o.contains("center")) {
    const json& c = o.at("center");
    if (c.is_number()) s.center = {c.get<double>(), 0.5};
    else if (c.is_array() && !c.empty() && c.size() <= 2 && std::all_of(c.begin(), c.end(), [](const json& v) { return v.is_number(); })) {
      s.center = c.get<std::vector<double>>();
      if (s.center.size() == 1) s.center.push_back(0.5);
    } else {
      throw ConfigError("obstacle.center", "expected a number or an array of 1 or 2 numbers");
    }
    for (double x : s.center)
      if (!(x > 0.0 && x < 1.0)) throw ConfigError("obstacle.center", "coordinates must lie in (0,1)");
  }
  s.radius = get_number(o, where, "radius", s.radius);
  require_positive(s.radius, "obstacle.radius");
  if (o.contains("window")) {
    const json& w = o.at("window");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
      throw ConfigError("obstacle.window", "expected [t_begin, t_end]");
    s.t_begin = w[0].get<double>();
    s.t_end = w[1].get<double>();
    if (!(s.t_begin >= 0.0 && s.t_end > s.t_begin)) throw ConfigError("obstacle.window", "need 0 <= t_begin < t_end");
  }
  s.compact_support = s.kind != "constant" && s.kind != "custom-table";
  if (o.contains("compact_support")) {
    if (!o.at("compact_support").is_boolean()) throw ConfigError("obstacle.compact_support", "expected true or false");
    s.compact_support = o.at("compact_support").get<bool>();
  }
  if (s.kind == "custom-table") {
    if (!o.contains("table") || !o.at("table").is_string())
      throw ConfigError("obstacle.table", "custom-table obstacles need a CSV path");
    s.table = o.at("table").get<std::string>();
    if (s.table.is_relative() && !base_dir.empty()) s.table = base_dir / s.table;
  } else if (o.contains("table")) {
    throw ConfigError("obstacle.table", "only used by custom-table obstacles");
  }
  return s;
}

void parse_solver(const json& s, ExperimentConfig& c) {
  const std::string where = "solver";
  if (!s.is_object()) throw ConfigError(where, "expected an object");
  reject_unknown(s, where, {"newton_tol", "newton_max_iter", "w_floor", "sweep_tol", "max_sweeps"});
  c.pme.newton_tol = get_number(s, where, "newton_tol", c.pme.newton_tol);
  require_positive(c.pme.newton_tol, "solver.newton_tol");
  c.pme.newton_max_iter = static_cast<int>(get_integer(s, where, "newton_max_iter", c.pme.newton_max_iter));
  if (c.pme.newton_max_iter < 1) throw ConfigError("solver.newton_max_iter", "must be >= 1");
  c.pme.w_floor = get_number(s, where, "w_floor", c.pme.w_floor);
  require_positive(c.pme.w_floor, "solver.w_floor");
  if (s.contains("sweep_tol")) {
    c.balayage.sweep_tol = get_number(s, where, "sweep_tol", 0.0);
    require_positive(c.balayage.sweep_tol, "solver.sweep_tol");
  }
  c.balayage.max_sweeps = get_integer(s, where, "max_sweeps", c.balayage.max_sweeps);
  if (c.balayage.max_sweeps < 1) throw ConfigError("solver.max_sweeps", "must be >= 1");
}

void parse_names(const json& names, const std::string& field, CheckSpec& spec) {
  if (!names.is_array()) throw ConfigError(field, "expected an array of check names");
  for (const auto& n : names) {
    if (!n.is_string()) throw ConfigError(field, "expected an array of check names");
    const std::string name = n.get<std::string>();
    if (name == "all") {
      spec.names = known_checks();
      return;
    }
    const auto& known = known_checks();
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError(field, "unknown check '" + name + "'");
    if (std::find(spec.names.begin(), spec.names.end(), name) == spec.names.end()) spec.names.push_back(name);
  }
}

void parse_checks(const json& j, ExperimentConfig& c) {
  CheckSpec& spec = c.checks;
  if (j.is_array()) {
    parse_names(j, "checks", spec);
    return;
  }
  const std::string where = "checks";
  if (!j.is_object()) throw ConfigError(where, "expected an array or an object");
  reject_unknown(j, where, {"names", "levels", "base", "coincidence_tol", "pairs", "test_fields", "eps"});
  if (j.contains("names")) parse_names(j.at("names"), "checks.names", spec);
  spec.levels = static_cast<int>(get_integer(j, where, "levels", spec.levels));
  if (spec.levels < 2) throw ConfigError("checks.levels", "must be >= 2");
  if (j.contains("base")) {
    GridSpec fallback = spec.base;
    spec.base = parse_grid(j.at("base"), "checks.base", fallback);
    if (spec.base.d != c.grid.d) throw ConfigError("checks.base.d", "must match grid.d");
  }
  spec.coincidence_tol = get_number(j, where, "coincidence_tol", spec.coincidence_tol);
  require_positive(spec.coincidence_tol, "checks.coincidence_tol");
  spec.pairs = static_cast<int>(get_integer(j, where, "pairs", spec.pairs));
  if (spec.pairs < 1) throw ConfigError("checks.pairs", "must be >= 1");
  spec.test_fields = static_cast<int>(get_integer(j, where, "test_fields", spec.test_fields));
  if (spec.test_fields < 1) throw ConfigError("checks.test_fields", "must be >= 1");
  if (j.contains("eps")) {
    const json& e = j.at("eps");
    if (!e.is_array() || e.empty()) throw ConfigError("checks.eps", "expected a nonempty array of numbers");
    spec.eps.clear();
    for (const auto& v : e) {
      if (!v.is_number() || v.get<double>() < 0.0) throw ConfigError("checks.eps", "entries must be numbers >= 0");
      spec.eps.push_back(v.get<double>());
    }
  }
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "coincidence", "scaled_source", "mollifier",   "comparison",  "obstacle_monotonicity", "supersolution",
      "off_contact", "positivity_slabs", "barenblatt", "minimality", "caccioppoli"};
  return names;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("(root)", "expected an object");
  reject_unknown(j, "", {"m", "grid", "obstacle", "solver", "checks", "output_dir", "seed"});
  ExperimentConfig c;
  c.pme.m = get_number(j, "", "m", c.pme.m);
  if (!(c.pme.m > 0.0 && c.pme.m < 1.0)) throw ConfigError("m", "must lie in (0,1)");
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"), "grid", c.grid);
  c.checks.base = default_base(c.grid);
  if (j.contains("obstacle")) c.obstacle = parse_obstacle(j.at("obstacle"), base_dir);
  if (c.obstacle.t_begin >= 0.0 && c.obstacle.t_end > c.grid.T)
    throw ConfigError("obstacle.window", "must lie inside [0, T]");
  if (j.contains("solver")) parse_solver(j.at("solver"), c);
  if (j.contains("checks")) parse_checks(j.at("checks"), c);
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string() || j.at("output_dir").get<std::string>().empty())
      throw ConfigError("output_dir", "expected a nonempty string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(file)", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("(file)", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

Obstacle<double> make_obstacle(const Grid& grid, const ObstacleSpec& spec) {
  Obstacle<double> obs;
  const double a = spec.t_begin >= 0.0 ? spec.t_begin : 0.2 * grid.T();
  const double b = spec.t_end >= 0.0 ? spec.t_end : 0.8 * grid.T();
  if (spec.kind == "zero") {
    obs.psi = grid.zero_field();
  } else if (spec.kind == "constant") {
    obs.psi = Field<double>::Constant(grid.slice_size(), grid.time_points(), spec.amplitude);
  } else if (spec.kind == "bump" || spec.kind == "product-bump") {
    fixtures::BumpShape s;
    s.amplitude = spec.amplitude;
    s.center = spec.center;
    s.radius = spec.radius;
    s.t_begin = a;
    s.t_end = b;
    s.product = spec.kind == "product-bump";
    obs = fixtures::bump_obstacle(grid, s);
  } else if (spec.kind == "custom-table") {
    try {
      obs.psi = io::read_field_csv(spec.table, grid);
    } catch (const std::exception& e) {
      throw ConfigError("obstacle.table", e.what());
    }
  } else {
    throw ConfigError("obstacle.kind", "unknown kind '" + spec.kind + "'");
  }
  obs.compact_support = spec.compact_support;
  obs.holder_exponent = 1.0;
  try {
    validate_obstacle(grid, obs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("obstacle", e.what());
  }
  return obs;
}

}  // namespace pmeobs
