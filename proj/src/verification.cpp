#include "pmeobs/verification.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "pmeobs/fixtures.hpp"

namespace pmeobs {

using json = nlohmann::json;

namespace {

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

json params_json(const PmeParameters<double>& p) {
  return {{"m", p.m}, {"newton_tol", p.newton_tol}, {"newton_max_iter", p.newton_max_iter},
          {"w_floor", p.w_floor}};
}

json grid_json(const Grid& g) {
  return to_json(GridSpec{g.dim(), g.nx(), g.ny(), g.nt(), g.T()});
}

json grids_json(const std::vector<GridSpec>& grids) {
  json a = json::array();
  for (const auto& g : grids) a.push_back(to_json(g));
  return a;
}

std::string level_name(const char* what, std::size_t k) { return std::string(what) + "[" + std::to_string(k) + "]"; }

/// Zeroes lateral nodes, the first slice and the last slice.
void clear_parabolic_and_top(const Grid& grid, Field<double>& phi) {
  phi.col(0).setZero();
  phi.col(grid.nt()).setZero();
  for (Index k = 0; k < grid.time_points(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n)
      if (grid.on_lateral(n)) phi(n, k) = 0.0;
}

double time_bump(double t, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  return fixtures::bump_profile((t - mid) / half);
}

double sup_abs(const Field<double>& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

bool Condition::holds() const {
  if (std::isnan(value) || std::isnan(threshold)) return false;
  return relation == Relation::LessEqual ? value <= threshold : value >= threshold;
}

bool VerdictReport::pass() const {
  for (const auto& c : conditions)
    if (!c.holds()) return false;
  return true;
}

double VerdictReport::value(const std::string& name) const {
  for (const auto& [k, v] : measured)
    if (k == name) return v;
  throw std::out_of_range("verdict has no measurement named " + name);
}

json to_json(const VerdictReport& r) {
  json measured = json::object();
  for (const auto& [k, v] : r.measured) measured[k] = v;
  json conds = json::array();
  for (const auto& c : r.conditions)
    conds.push_back({{"quantity", c.quantity},
                     {"value", c.value},
                     {"relation", c.relation == Relation::LessEqual ? "<=" : ">="},
                     {"threshold", c.threshold},
                     {"holds", c.holds()}});
  return {{"check", r.check},         {"property", r.property}, {"pass", r.pass()},
          {"measured", measured},     {"conditions", conds},    {"parameters", r.parameters},
          {"details", r.details}};
}

VerdictReport verdict_from_json(const json& j) {
  VerdictReport r;
  r.check = j.at("check").get<std::string>();
  r.property = j.at("property").get<std::string>();
  for (const auto& [k, v] : j.at("measured").items()) r.measure(k, v.get<double>());
  for (const auto& c : j.at("conditions"))
    r.require(c.at("quantity").get<std::string>(), c.at("value").get<double>(),
              c.at("relation").get<std::string>() == "<=" ? Relation::LessEqual : Relation::GreaterEqual,
              c.at("threshold").get<double>());
  r.parameters = j.value("parameters", json::object());
  r.details = j.value("details", json::object());
  return r;
}

json to_json(const std::vector<VerdictReport>& reports) {
  json a = json::array();
  for (const auto& r : reports) a.push_back(to_json(r));
  return a;
}

void print_table(std::ostream& os, const std::vector<VerdictReport>& reports) {
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-6s %s\n", "check", "result", "worst condition");
  os << line;
  for (const auto& r : reports) {
    // the first failing condition, or the last one when all hold
    const Condition* shown = nullptr;
    for (const auto& c : r.conditions)
      if (!c.holds()) {
        shown = &c;
        break;
      }
    if (!shown && !r.conditions.empty()) shown = &r.conditions.back();
    std::string cond = "-";
    if (shown) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s = %.4g %s %.4g", shown->quantity.c_str(), shown->value,
                    shown->relation == Relation::LessEqual ? "<=" : ">=", shown->threshold);
      cond = buf;
    }
    std::snprintf(line, sizeof line, "%-28s %-6s %s\n", r.check.c_str(), r.pass() ? "PASS" : "FAIL",
                  cond.c_str());
    os << line;
  }
}

GridSpec GridSpec::refined() const {
  GridSpec g = *this;
  g.nx = 2 * nx - 1;
  if (d == 2) g.ny = 2 * ny - 1;
  g.nt = 2 * nt;
  return g;
}

json to_json(const GridSpec& g) {
  json j = {{"d", g.d}, {"nx", g.nx}, {"nt", g.nt}, {"T", g.T}};
  if (g.d == 2) j["ny"] = g.ny;
  return j;
}

std::vector<GridSpec> refinement_sequence(const GridSpec& base, int levels) {
  if (levels < 1) throw std::invalid_argument("refinement_sequence: levels must be >= 1");
  std::vector<GridSpec> out{base};
  for (int l = 1; l < levels; ++l) out.push_back(out.back().refined());
  return out;
}

std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log2(errors[k] / errors[k + 1]));
  return out;
}

Field<double> random_test_field(const Grid& grid, Rng& rng) {
  const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
  const int d = grid.dim();
  double c[2], r[2];
  for (int i = 0; i < 2; ++i) {
    c[i] = uniform(rng, 0.25, 0.75);
    r[i] = uniform(rng, 0.08, 0.2);
  }
  const double sigma = uniform(rng, 0.04, 0.12);
  const double T = grid.T();
  const double a = uniform(rng, 0.05, 0.4) * T;
  const double b = uniform(rng, 0.6, 0.95) * T;
  const double amp = uniform(rng, 0.5, 2.0);
  auto space = [&](double x, double y) {
    const double dx = x - c[0], dy = d == 2 ? y - c[1] : 0.0;
    const double dist = std::sqrt(dx * dx + dy * dy);
    switch (kind) {
      case 0: return std::max(0.0, 1.0 - dist / r[0]);
      case 1: {
        const double R = r[0];
        if (dist >= R) return 0.0;
        return std::exp(-dist * dist / (2 * sigma * sigma)) - std::exp(-R * R / (2 * sigma * sigma));
      }
      default:
        return fixtures::bump_profile(dx / r[0]) * (d == 2 ? fixtures::bump_profile(dy / r[1]) : 1.0);
    }
  };
  Field<double> phi =
      grid.sample_field([&](double x, double y, double t) { return amp * space(x, y) * time_bump(t, a, b); });
  clear_parabolic_and_top(grid, phi);
  return phi;
}

Field<double> random_bump_field(const Grid& grid, Rng& rng, double max_amplitude) {
  fixtures::BumpShape s;
  s.amplitude = uniform(rng, 0.2, 1.0) * max_amplitude;
  s.center = {uniform(rng, 0.3, 0.7), uniform(rng, 0.3, 0.7)};
  s.radius = uniform(rng, 0.08, 0.2);
  s.t_begin = uniform(rng, 0.1, 0.4) * grid.T();
  s.t_end = uniform(rng, 0.6, 0.9) * grid.T();
  s.product = grid.dim() == 2 && std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  return fixtures::bump_obstacle(grid, s).psi;
}

VerdictReport check_coincidence(const ObstacleFactory& make, const PmeParameters<double>& p,
                                const std::vector<GridSpec>& grids, double tol_rel,
                                const BalayageOptions<double>& opt) {
  if (grids.empty()) throw std::invalid_argument("check_coincidence: empty grid sequence");
  VerdictReport r;
  r.check = "coincidence";
  r.property = "the variational obstacle solution equals the minimal supersolution above the obstacle";
  r.parameters = {{"pme", params_json(p)}, {"grids", grids_json(grids)}, {"tol_rel", tol_rel},
                  {"sweep_tol", opt.sweep_tol}, {"max_sweeps", opt.max_sweeps}};
  std::vector<double> e;
  double sup_psi = 0.0;
  json per_grid = json::array();
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const Grid grid = grids[k].make();
    const Obstacle<double> obs = make(grid);
    const auto vi = vi_solve(grid, obs, p);
    const auto bal = balayage_solve(grid, obs, p, opt);
    e.push_back(sup_abs(vi.u - bal.u));
    sup_psi = obs.sup();
    r.measure(level_name("e", k), e.back());
    per_grid.push_back({{"nx", grids[k].nx},
                        {"nt", grids[k].nt},
                        {"e", e.back()},
                        {"sup_psi", sup_psi},
                        {"sweeps", bal.report.sweeps},
                        {"contact_vi", vi.report.contact_nodes},
                        {"contact_balayage", bal.report.contact_nodes}});
  }
  const auto orders = observed_orders(e);
  for (std::size_t k = 0; k < orders.size(); ++k) r.measure(level_name("order", k), orders[k]);
  for (std::size_t k = 0; k + 1 < e.size(); ++k)
    r.require("e[" + std::to_string(k + 1) + "] - e[" + std::to_string(k) + "]", e[k + 1] - e[k],
              Relation::LessEqual, 0.0);
  r.measure("sup_psi", sup_psi);
  r.require("e_finest", e.back(), Relation::LessEqual, tol_rel * sup_psi);
  r.details["levels"] = per_grid;
  return r;
}

VerdictReport check_comparison(const PmeParameters<double>& p, const Grid& grid, std::uint64_t seed, int pairs,
                               double slack) {
  VerdictReport r;
  r.check = "comparison";
  r.property = "ordered parabolic boundary data give ordered free solutions";
  r.parameters = {{"pme", params_json(p)}, {"grid", grid_json(grid)}, {"seed", seed},
                  {"pairs", pairs}, {"slack", slack}};
  Rng rng(seed);
  // smooth nonnegative data g(x, y, t) on the closed cylinder
  auto random_data = [&]() {
    const double c0 = uniform(rng, 0.0, 0.3);
    const double c1 = uniform(rng, 0.0, 0.3);
    const double om = uniform(rng, 1.0, 6.0), ph = uniform(rng, 0.0, 6.3);
    const double kx = uniform(rng, 0.5, 3.0);
    Field<double> g = grid.sample_field([&](double x, double y, double t) {
      return c0 + c1 * (1.0 + std::sin(om * t + ph)) * (1.0 + std::cos(kx * (x + y)));
    });
    const double bc = uniform(rng, 0.3, 0.7), br = uniform(rng, 0.1, 0.3), ba = uniform(rng, 0.0, 1.0);
    const Slice<double> init_bump = grid.sample([&](double x, double y) {
      const double sy = grid.dim() == 2 ? (y - bc) / br : 0.0;
      return ba * fixtures::bump_profile(std::hypot((x - bc) / br, sy));
    });
    g.col(0) += init_bump;
    return g;
  };
  Index violations = 0;
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Field<double> g = random_data();
    const Field<double> h = i == 0 ? Field<double>::Zero(g.rows(), g.cols()) : random_data();
    const auto u1 = pme_solve(grid, BoundaryData<double>{g}, p).u;
    const auto u2 = pme_solve(grid, BoundaryData<double>{g + h}, p).u;
    const Field<double> diff = u1 - u2;
    worst = std::max(worst, diff.maxCoeff());
    violations += (diff.array() > slack).count();
  }
  r.measure("max(u - u')", worst);
  r.require("violations", static_cast<double>(violations), Relation::LessEqual, 0.0);
  return r;
}

VerdictReport check_obstacle_monotonicity(const PmeParameters<double>& p, const Grid& grid, std::uint64_t seed,
                                          int pairs, double slack) {
  VerdictReport r;
  r.check = "obstacle_monotonicity";
  r.property = "ordered obstacles give ordered obstacle solutions";
  r.parameters = {{"pme", params_json(p)}, {"grid", grid_json(grid)}, {"seed", seed},
                  {"pairs", pairs}, {"slack", slack}};
  Rng rng(seed);
  Index violations = 0;
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    Obstacle<double> o1, o2;
    o1.compact_support = o2.compact_support = true;
    o1.psi = random_bump_field(grid, rng, 1.0);
    o2.psi = o1.psi + random_bump_field(grid, rng, 0.5);
    const auto u1 = vi_solve(grid, o1, p).u;
    const auto u2 = vi_solve(grid, o2, p).u;
    const Field<double> diff = u1 - u2;
    worst = std::max(worst, diff.maxCoeff());
    violations += (diff.array() > slack).count();
  }
  r.measure("max(u_1 - u_2)", worst);
  r.require("violations", static_cast<double>(violations), Relation::LessEqual, 0.0);
  return r;
}

double caccioppoli_ratio(const Grid& grid, const Field<double>& u, const Slice<double>& xi, double m) {
  detail::require_field(grid, u, "caccioppoli_ratio");
  detail::require_slice(grid, xi, "caccioppoli_ratio");
  double lhs = 0.0;
  for (Index k = 0; k < grid.time_points(); ++k) {
    const double wt = (k == 0 || k == grid.nt()) ? grid.dt() / 2 : grid.dt();
    lhs += wt * h1_seminorm_sq(grid, detail::pow_slice(u.col(k), m), xi);
  }
  const double M = u.size() ? u.maxCoeff() : 0.0;
  const double denom = std::pow(M, 2 * m) * grid.T() * h1_seminorm_sq(grid, xi) +
                       std::pow(M, m + 1) * integrate(grid, xi.cwiseProduct(xi));
  return denom > 0.0 ? lhs / denom : 0.0;
}

VerdictReport check_caccioppoli(const ObstacleFactory& make, const PmeParameters<double>& p,
                                const std::vector<GridSpec>& grids,
                                const std::function<double(double, double)>& xi) {
  if (grids.empty()) throw std::invalid_argument("check_caccioppoli: empty grid sequence");
  VerdictReport r;
  r.check = "caccioppoli";
  r.property = "energy of a bounded supersolution is controlled by its sup and the cutoff";
  r.parameters = {{"pme", params_json(p)}, {"grids", grids_json(grids)}};
  std::vector<double> rho;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const Grid grid = grids[k].make();
    const auto u = vi_solve(grid, make(grid), p).u;
    rho.push_back(caccioppoli_ratio(grid, u, grid.sample(xi), p.m));
    r.measure(level_name("rho", k), rho.back());
  }
  const double c_cal = 2.0 * rho.front();
  r.measure("c_cal", c_cal);
  for (std::size_t k = 0; k < rho.size(); ++k) r.require(level_name("rho", k), rho[k], Relation::LessEqual, c_cal);
  return r;
}

double scaled_source_coefficient(double m, double eps) {
  return (1.0 - std::pow(1.0 + eps, m - 1.0)) / std::pow(1.0 + eps, m);
}

double scaled_source_defect(const Grid& grid, const Field<double>& u, double m, double eps) {
  const double s = 1.0 + eps;
  const Field<double> u_eps = u / s;
  const Field<double> r_eps = scheme_residual(grid, u_eps, m);
  const Field<double> r_u = scheme_residual(grid, u, m) / s;
  const double c = scaled_source_coefficient(m, eps);
  Field<double> lap_f = grid.zero_field();
  for (Index k = 1; k <= grid.nt(); ++k) {
    const Slice<double> f = c * detail::pow_slice(u.col(k), m);
    lap_f.col(k) = laplacian(grid, f);
  }
  const Field<double> defect = r_eps - r_u + lap_f;
  const double scale = std::max({sup_abs(r_eps), sup_abs(r_u), sup_abs(lap_f)});
  const double d = sup_abs(defect);
  return scale > 0.0 ? d / scale : d;
}

VerdictReport check_scaled_source(const Grid& grid, const Field<double>& u, double m,
                                  const std::vector<double>& eps, double tol) {
  VerdictReport r;
  r.check = "scaled_source";
  r.property = "u/(1+eps) solves the equation with source -Lap f, f = c_eps u^m";
  r.parameters = {{"m", m}, {"grid", grid_json(grid)}, {"eps", eps}, {"tol", tol}};
  for (double e : eps) {
    char name[64];
    std::snprintf(name, sizeof name, "defect(eps=%g)", e);
    const double d = scaled_source_defect(grid, u, m, e);
    r.measure(name, d);
    r.require(name, d, Relation::LessEqual, tol);
  }
  return r;
}

std::vector<std::pair<Index, Index>> positivity_slabs(const Grid& grid, const Field<double>& u) {
  std::vector<std::pair<Index, Index>> slabs;
  for (Index k = 0; k < grid.time_points(); ++k) {
    if (!(interior_extrema(grid, u.col(k)).second > 0.0)) continue;
    if (!slabs.empty() && slabs.back().second == k - 1) slabs.back().second = k;
    else slabs.emplace_back(k, k);
  }
  return slabs;
}

VerdictReport check_positivity_slabs(const Grid& grid, const Field<double>& u, double theta,
                                     const std::string& label) {
  detail::require_field(grid, u, "check_positivity_slabs");
  if (theta <= 0.0) theta = 1e-8 * (u.size() ? u.cwiseAbs().maxCoeff() : 0.0);
  VerdictReport r;
  r.check = "positivity_slabs(" + label + ")";
  r.property = "on every slice the solution is either positive everywhere or at most theta";
  r.parameters = {{"grid", grid_json(grid)}, {"theta", theta}};
  Index violations = 0;
  for (Index k = 0; k < grid.time_points(); ++k) {
    const auto [hi, lo] = interior_extrema(grid, u.col(k));
    if (hi > theta && !(lo > 0.0)) ++violations;
  }
  const auto slabs = positivity_slabs(grid, u);
  json s = json::array();
  for (const auto& [a, b] : slabs) s.push_back({{"first", a}, {"last", b}, {"t_first", grid.t(a)}, {"t_last", grid.t(b)}});
  r.details["slabs"] = s;
  r.measure("slabs", static_cast<double>(slabs.size()));
  r.require("violations", static_cast<double>(violations), Relation::LessEqual, 0.0);
  return r;
}

VerdictReport check_mollifier(std::uint64_t seed) {
  VerdictReport r;
  r.check = "mollifier";
  r.property = "d/dt [[v]]_h = (v - [[v]]_h)/h for the exponential time mollifier";

  // v(t) = t, v_o = 0: [[v]]_h = t - h (1 - e^{-t/h}); centred differences
  // carry dt^2 max|[[v]]'''| / 6 = dt^2 / (6 h^2).
  const double h = 1.0;
  const Index nt_exact = 100000;
  const Grid line(1, 1, 0, nt_exact, 1.0);
  const Field<double> v = line.sample_field([](double, double, double t) { return t; });
  const MollifierParams<double> pl{h, line.zero_slice()};
  const Field<double> mv = mollify(line, v, pl);
  double closed_dev = 0.0;
  for (Index k = 0; k < line.time_points(); ++k) {
    const double t = line.t(k);
    closed_dev = std::max(closed_dev, std::abs(mv(1, k) - (t + h * std::expm1(-t / h))));
  }
  const double res_linear = mollifier_identity_residual(line, v, pl);
  r.measure("closed_form_deviation", closed_dev);
  r.measure("truncation_bound", line.dt() * line.dt() / (6.0 * h * h));
  r.require("residual(v=t)", res_linear, Relation::LessEqual, 1e-10);

  // smooth random v, dt-refinement
  Rng rng(seed);
  const double hs = 0.1;
  double amp[3], om[3], ph[3];
  for (int j = 0; j < 3; ++j) {
    amp[j] = uniform(rng, 0.2, 1.0);
    om[j] = uniform(rng, 1.0, 8.0);
    ph[j] = uniform(rng, 0.0, 6.3);
  }
  const double vo_shift = uniform(rng, 0.0, 1.0);
  std::vector<double> res;
  for (Index nt : {50, 100, 200, 400}) {
    const Grid g(1, 4, 0, nt, 1.0);
    const Field<double> vs = g.sample_field([&](double x, double, double t) {
      double s = 3.0;
      for (int j = 0; j < 3; ++j) s += amp[j] * std::sin(om[j] * t + ph[j] + 2.0 * x);
      return s;
    });
    const Slice<double> vo = g.sample([&](double x, double) { return 3.0 + vo_shift * std::cos(3.0 * x); });
    res.push_back(mollifier_identity_residual(g, vs, MollifierParams<double>{hs, vo}));
  }
  const auto orders = observed_orders(res);
  for (std::size_t k = 0; k < res.size(); ++k) r.measure(level_name("residual", k), res[k]);
  for (std::size_t k = 0; k < orders.size(); ++k)
    r.require(level_name("order", k), orders[k], Relation::GreaterEqual, 1.8);
  r.parameters = {{"h_linear", h}, {"nt_linear", nt_exact}, {"h_random", hs}, {"seed", seed}};
  return r;
}

VerdictReport check_supersolution(const Grid& grid, const Field<double>& u, double m, std::uint64_t seed,
                                  int count, double tol, const std::string& label) {
  VerdictReport r;
  r.check = "supersolution(" + label + ")";
  r.property = "weak residual against nonnegative test fields is nonnegative";
  r.parameters = {{"grid", grid_json(grid)}, {"m", m}, {"seed", seed}, {"count", count}, {"tol", tol}};
  Rng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const Field<double> phi = random_test_field(grid, rng);
    const double norm = phi.maxCoeff();
    if (!(norm > 0.0)) continue;
    worst = std::min(worst, weak_residual(grid, u, phi, m, WeakForm::Scheme) / norm);
  }
  if (!std::isfinite(worst)) worst = 0.0;
  r.require("min residual/|phi|", worst, Relation::GreaterEqual, -tol);
  return r;
}

VerdictReport check_off_contact(const ObstacleFactory& make, const PmeParameters<double>& p,
                                const std::vector<GridSpec>& grids, double min_order) {
  if (grids.empty()) throw std::invalid_argument("check_off_contact: empty grid sequence");
  VerdictReport r;
  r.check = "off_contact";
  r.property = "away from the contact set the obstacle solution solves the free equation";
  r.parameters = {{"pme", params_json(p)}, {"grids", grids_json(grids)}, {"min_order", min_order}};
  struct Probe {
    double cx, cy, radius, a, b;  // times as fractions of T
  };
  const Probe probes[] = {{0.15, 0.5, 0.1, 0.3, 0.72}, {0.85, 0.5, 0.1, 0.35, 0.7}, {0.12, 0.5, 0.08, 0.4, 0.65}};
  std::vector<double> res;
  double min_gap = std::numeric_limits<double>::infinity();
  double delta = 0.0;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const Grid grid = grids[k].make();
    const Obstacle<double> obs = make(grid);
    const auto u = vi_solve(grid, obs, p).u;
    delta = 1e-3 * obs.sup();
    double worst = 0.0;
    for (const Probe& pr : probes) {
      Field<double> phi = grid.sample_field([&](double x, double y, double t) {
        double s = fixtures::bump_profile((x - pr.cx) / pr.radius);
        if (grid.dim() == 2) s *= fixtures::bump_profile((y - pr.cy) / pr.radius);
        return s * time_bump(t, pr.a * grid.T(), pr.b * grid.T());
      });
      clear_parabolic_and_top(grid, phi);
      for (Index kk = 0; kk < grid.time_points(); ++kk)
        for (Index n = 0; n < grid.slice_size(); ++n)
          if (phi(n, kk) > 0.0) min_gap = std::min(min_gap, u(n, kk) - obs.psi(n, kk));
      worst = std::max(worst, std::abs(weak_residual(grid, u, phi, p.m, WeakForm::Trapezoidal)) / phi.maxCoeff());
    }
    res.push_back(worst);
    r.measure(level_name("residual", k), worst);
  }
  r.require("min(u - psi) on supports", min_gap, Relation::GreaterEqual, delta);
  const auto orders = observed_orders(res);
  for (std::size_t k = 0; k < orders.size(); ++k)
    r.require(level_name("order", k), orders[k], Relation::GreaterEqual, min_order);
  return r;
}

VerdictReport check_barenblatt(const PmeParameters<double>& p, int levels) {
  VerdictReport r;
  r.check = "barenblatt";
  r.property = "free solver converges to the source-type solution";
  const double t0 = 0.01, span = 0.04, mass = 0.2;
  const Barenblatt<double> U(p.m, 1, mass);
  std::vector<double> err;
  Index nx = 20, nt = 10;
  json lv = json::array();
  for (int l = 0; l < levels; ++l) {
    const Grid grid(1, nx, 0, nt, span);
    auto exact = [&](double x, double, double t) { return U((x - 0.5) * (x - 0.5), t0 + t); };
    const Field<double> ref = grid.sample_field(exact);
    const auto u = pme_solve(grid, BoundaryData<double>{ref}, p).u;
    err.push_back(sup_abs(u - ref));
    r.measure(level_name("error", static_cast<std::size_t>(l)), err.back());
    lv.push_back({{"nx", nx}, {"nt", nt}});
    nx = 2 * nx + 1;
    nt *= 2;
  }
  const auto orders = observed_orders(err);
  for (std::size_t k = 0; k < orders.size(); ++k) {
    r.require(level_name("order", k), orders[k], Relation::GreaterEqual, 0.7);
    r.require(level_name("order", k), orders[k], Relation::LessEqual, 2.2);
  }
  r.parameters = {{"pme", params_json(p)}, {"t0", t0}, {"span", span}, {"mass", mass}, {"levels", lv}};
  return r;
}

VerdictReport check_minimality(const Grid& grid, const Obstacle<double>& obs, const Field<double>& u_bal,
                               const Field<double>& u_vi, const PmeParameters<double>& p, std::uint64_t seed,
                               int competitors) {
  VerdictReport r;
  r.check = "minimality";
  r.property = "the balayage is below every sampled supersolution above psi, below sup psi, "
               "and zero before psi becomes positive";
  r.parameters = {{"grid", grid_json(grid)}, {"pme", params_json(p)}, {"seed", seed}, {"competitors", competitors}};
  Rng rng(seed);
  const double sup_psi = obs.sup();
  double excess = -std::numeric_limits<double>::infinity();
  auto probe = [&](const Field<double>& v) { excess = std::max(excess, (u_bal - v).maxCoeff()); };
  for (double s : {0.0, 0.1, 0.5}) probe(Field<double>::Constant(u_bal.rows(), u_bal.cols(), sup_psi * (1.0 + s)));
  for (int i = 0; i < competitors; ++i) {
    if (i % 3 == 2) {
      Obstacle<double> raised = obs;
      raised.psi += random_bump_field(grid, rng, 0.5);
      probe(vi_solve(grid, raised, p).u);
    } else {
      probe(u_vi + random_test_field(grid, rng));
    }
  }
  r.require("max(u_bal - v)", excess, Relation::LessEqual, 1e-8);
  r.require("sup u_bal - sup psi", u_bal.maxCoeff() - sup_psi, Relation::LessEqual, 1e-12);

  Index quiet = -1;  // last slice index with psi == 0 on all slices up to it
  for (Index k = 0; k < grid.time_points(); ++k) {
    if ((obs.psi.col(k).array() != 0.0).any()) break;
    quiet = k;
  }
  double early = 0.0;
  for (Index k = 0; k <= quiet; ++k) early = std::max(early, u_bal.col(k).cwiseAbs().maxCoeff());
  r.measure("zero_window_end", quiet >= 0 ? grid.t(quiet) : 0.0);
  r.require("max |u_bal| before psi > 0", early, Relation::LessEqual, 1e-10);
  return r;
}

}  // namespace pmeobs
