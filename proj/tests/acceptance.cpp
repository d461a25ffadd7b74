// Acceptance suite: one pass/fail line per criterion, exit 1 if any fails.
// Writes every verdict to acceptance.json in the working directory.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmeobs/balayage.hpp"
#include "pmeobs/fixtures.hpp"
#include "pmeobs/obstacle.hpp"
#include "pmeobs/verification.hpp"
#include "support/oracles.hpp"

using namespace pmeobs;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Criterion {
  int id;
  std::string name;
  std::vector<VerdictReport> parts;

  bool pass() const {
    for (const auto& p : parts)
      if (!p.pass()) return false;
    return !parts.empty();
  }
};

std::string summary(const Criterion& c) {
  // first failing condition, else the last condition of the last part
  for (const auto& p : c.parts)
    for (const auto& cond : p.conditions)
      if (!cond.holds()) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s: %s = %.3g violates %s %.3g", p.check.c_str(), cond.quantity.c_str(),
                      cond.value, cond.relation == Relation::LessEqual ? "<=" : ">=", cond.threshold);
        return buf;
      }
  const auto& p = c.parts.back();
  if (p.conditions.empty()) return p.check;
  const auto& cond = p.conditions.back();
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s: %s = %.3g %s %.3g", p.check.c_str(), cond.quantity.c_str(), cond.value,
                cond.relation == Relation::LessEqual ? "<=" : ">=", cond.threshold);
  return buf;
}

VerdictReport runtime_limit(const std::string& what, double seconds, double limit) {
  VerdictReport r;
  r.check = "runtime(" + what + ")";
  r.property = "wall-clock limit";
  r.measure("seconds", seconds);
  r.require("seconds", seconds, Relation::LessEqual, limit);
  return r;
}

const std::vector<GridSpec> kCoincidenceGrids{{1, 51, 0, 100, 1.0}, {1, 101, 0, 200, 1.0}, {1, 201, 0, 400, 1.0}};
const GridSpec kDefaultGrid{1, 101, 0, 200, 1.0};
constexpr std::uint64_t kSeed = 1;

Obstacle<double> default_obstacle(const Grid& g) { return fixtures::default_bump_obstacle(g); }

struct Solutions {
  Grid grid;
  Obstacle<double> obs;
  ViSolution<double> vi;
  BalayageSolution<double> bal;
};

Solutions solve_default(const GridSpec& spec, const PmeParameters<double>& p) {
  const Grid g = spec.make();
  auto obs = default_obstacle(g);
  auto vi = vi_solve(g, obs, p);
  auto bal = balayage_solve(g, obs, p);
  return {g, std::move(obs), std::move(vi), std::move(bal)};
}

Criterion coincidence(const PmeParameters<double>& p) {
  const auto start = Clock::now();
  auto v = check_coincidence(default_obstacle, p, kCoincidenceGrids, 1e-2);
  return {1, "coincidence of obstacle and balayage solutions", {v, runtime_limit("coincidence", seconds_since(start), 120.0)}};
}

Criterion scaled_source(const Solutions& s, const Solutions& s2d, const PmeParameters<double>& p) {
  const std::vector<double> eps{0.01, 0.1, 0.5, 1.0};
  const auto start = Clock::now();
  auto a = check_scaled_source(s.grid, s.vi.u, p.m, eps, 1e-12);
  const double t = seconds_since(start);
  a.check += "(obstacle)";
  auto b = check_scaled_source(s.grid, s.bal.u, p.m, eps, 1e-12);
  b.check += "(balayage)";
  auto c = check_scaled_source(s2d.grid, s2d.vi.u, p.m, eps, 1e-12);
  c.check += "(obstacle 2d)";
  return {2, "scaled-source identity", {a, b, c, runtime_limit("scaled_source", t, 1.0)}};
}

Criterion mollifier() { return {3, "mollifier identity", {check_mollifier(kSeed)}}; }

/// vi_step against exhaustive enumeration of contact sets on grids with at
/// most 12 interior nodes.
Criterion brute_force(const PmeParameters<double>& base) {
  VerdictReport r;
  r.check = "vi_step_vs_enumeration";
  r.property = "one obstacle step equals the unique feasible contact-set candidate";
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  PmeParameters<double> p = base;
  p.newton_tol = 1e-13;
  double worst = 0.0;
  int missing = 0, ambiguous = 0, max_nodes = 0;
  const int pairs = 50;
  for (int i = 0; i < pairs; ++i) {
    // alternate 1D lines of 1..12 nodes and 2D rectangles of at most 12 nodes
    Grid g = i % 2 == 0 ? Grid::line(1 + (i / 2) % 12, 1, 1.0)
                        : Grid::square(2 + (i / 2) % 2, 2 + (i / 2) % 3, 1, 1.0);
    if (g.interior().size() > 12) g = Grid::square(3, 4, 1, 1.0);
    max_nodes = std::max(max_nodes, static_cast<int>(g.interior().size()));
    Slice<double> u_prev(g.slice_size()), psi(g.slice_size()), bdry(g.slice_size());
    for (Index n = 0; n < g.slice_size(); ++n) {
      u_prev[n] = U(rng);
      psi[n] = U(rng) < 0.3 ? 0.0 : U(rng);
      bdry[n] = g.on_lateral(n) ? psi[n] + 0.5 * U(rng) : 0.0;
    }
    const double dt = i % 3 == 0 ? 0.002 : 0.01;
    int feasible = 0;
    const auto ref = oracle::enumerate_obstacle_step(g, u_prev, psi, bdry, p.m, dt, &feasible);
    if (!ref) {
      ++missing;
      continue;
    }
    if (feasible != 1) ++ambiguous;
    const auto step = vi_step<double>(g, u_prev, psi, bdry, p, dt);
    worst = std::max(worst, (step.u - *ref).cwiseAbs().maxCoeff());
  }
  r.parameters = {{"pairs", pairs}, {"max_interior_nodes", max_nodes}, {"seed", kSeed}};
  r.measure("max deviation", worst);
  r.require("cases without a feasible candidate", missing, Relation::LessEqual, 0.0);
  r.require("cases with several feasible candidates", ambiguous, Relation::LessEqual, 0.0);
  r.require("max deviation", worst, Relation::LessEqual, 1e-10);
  return {4, "obstacle step vs brute-force enumeration", {r}};
}

Criterion ordering(const PmeParameters<double>& p) {
  const Grid g = kDefaultGrid.make();
  return {5,
          "comparison principle and obstacle monotonicity",
          {check_comparison(p, g, kSeed, 20, 1e-10), check_obstacle_monotonicity(p, g, kSeed, 20, 1e-10)}};
}

Criterion residuals(const Solutions& s, const PmeParameters<double>& p) {
  return {6,
          "supersolution and off-contact residuals",
          {check_supersolution(s.grid, s.vi.u, p.m, kSeed, 100, 1e-8, "obstacle"),
           check_supersolution(s.grid, s.bal.u, p.m, kSeed, 100, 1e-8, "balayage"),
           check_off_contact(default_obstacle, p, kCoincidenceGrids, 0.7)}};
}

Criterion positivity(const std::vector<const Solutions*>& all) {
  Criterion c{7, "positivity slabs", {}};
  for (const Solutions* s : all) {
    const std::string tag = "nx=" + std::to_string(s->grid.nx()) + (s->grid.dim() == 2 ? ",2d" : "");
    c.parts.push_back(check_positivity_slabs(s->grid, s->vi.u, -1.0, "obstacle " + tag));
    c.parts.push_back(check_positivity_slabs(s->grid, s->bal.u, -1.0, "balayage " + tag));
  }
  return c;
}

Criterion barenblatt(const PmeParameters<double>& p) { return {8, "source-solution convergence", {check_barenblatt(p)}}; }

Criterion minimality(const Solutions& s, const PmeParameters<double>& p) {
  return {9, "balayage minimality and bounds", {check_minimality(s.grid, s.obs, s.bal.u, s.vi.u, p, kSeed)}};
}

}  // namespace

int main() {
  const PmeParameters<double> p;  // m = 1/2 and default tolerances
  const auto start = Clock::now();
  std::vector<Criterion> results;
  auto report = [&](Criterion c) {
    std::printf("criterion %d  %-4s  %-48s %s\n", c.id, c.pass() ? "PASS" : "FAIL", c.name.c_str(), summary(c).c_str());
    std::fflush(stdout);
    results.push_back(std::move(c));
  };

  try {
    const Solutions def = solve_default(kDefaultGrid, p);
    const Solutions coarse = solve_default(kCoincidenceGrids[0], p);
    const Solutions fine = solve_default(kCoincidenceGrids[2], p);
    const Solutions flat = solve_default({2, 15, 15, 40, 1.0}, p);

    report(coincidence(p));
    report(scaled_source(def, flat, p));
    report(mollifier());
    report(brute_force(p));
    report(ordering(p));
    report(residuals(def, p));
    report(positivity({&coarse, &def, &fine, &flat}));
    report(barenblatt(p));
    report(minimality(def, p));
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 3;
  }

  json out = json::array();
  int failed = 0;
  for (const auto& c : results) {
    failed += !c.pass();
    out.push_back({{"criterion", c.id}, {"name", c.name}, {"pass", c.pass()}, {"verdicts", to_json(c.parts)}});
  }
  std::ofstream("acceptance.json") << out.dump(2) << "\n";
  std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(results.size()) - failed, results.size(),
              seconds_since(start));
  return failed == 0 ? 0 : 1;
}
