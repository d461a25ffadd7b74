#include "pmeobs/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "pmeobs/io.hpp"

namespace pmeobs {

using json = nlohmann::json;

namespace {

/// Both obstacle solutions on the config grid, computed on first use.
class FixtureCache {
public:
  explicit FixtureCache(const ExperimentConfig& cfg) : cfg_(cfg), grid_(cfg.grid.make()) {}

  const Grid& grid() const { return grid_; }

  const Obstacle<double>& obstacle() {
    if (!obs_) obs_ = make_obstacle(grid_, cfg_.obstacle);
    return *obs_;
  }
  const ViSolution<double>& vi() {
    if (!vi_) vi_ = vi_solve(grid_, obstacle(), cfg_.pme);
    return *vi_;
  }
  const BalayageSolution<double>& balayage() {
    if (!bal_) bal_ = balayage_solve(grid_, obstacle(), cfg_.pme, cfg_.balayage);
    return *bal_;
  }

private:
  const ExperimentConfig& cfg_;
  Grid grid_;
  std::optional<Obstacle<double>> obs_;
  std::optional<ViSolution<double>> vi_;
  std::optional<BalayageSolution<double>> bal_;
};

bool wanted(const std::vector<std::string>& names, const std::string& n) {
  return std::find(names.begin(), names.end(), n) != names.end();
}

double tent(double s) { return std::max(0.0, 1.0 - std::abs(s)); }

std::vector<VerdictReport> evaluate(const ExperimentConfig& cfg, const std::vector<std::string>& names,
                                    FixtureCache& fx) {
  std::vector<VerdictReport> out;
  const auto grids = refinement_sequence(cfg.checks.base, cfg.checks.levels);
  const ObstacleFactory factory = [&cfg](const Grid& g) { return make_obstacle(g, cfg.obstacle); };
  const int d = cfg.grid.d;
  for (const auto& name : known_checks()) {
    if (!wanted(names, name)) continue;
    if (name == "coincidence") {
      out.push_back(check_coincidence(factory, cfg.pme, grids, cfg.checks.coincidence_tol, cfg.balayage));
    } else if (name == "scaled_source") {
      out.push_back(check_scaled_source(fx.grid(), fx.vi().u, cfg.pme.m, cfg.checks.eps));
    } else if (name == "mollifier") {
      out.push_back(check_mollifier(cfg.seed));
    } else if (name == "comparison") {
      out.push_back(check_comparison(cfg.pme, fx.grid(), cfg.seed, cfg.checks.pairs));
    } else if (name == "obstacle_monotonicity") {
      out.push_back(check_obstacle_monotonicity(cfg.pme, fx.grid(), cfg.seed, cfg.checks.pairs));
    } else if (name == "supersolution") {
      out.push_back(check_supersolution(fx.grid(), fx.vi().u, cfg.pme.m, cfg.seed, cfg.checks.test_fields,
                                        1e-8, "obstacle"));
      out.push_back(check_supersolution(fx.grid(), fx.balayage().u, cfg.pme.m, cfg.seed, cfg.checks.test_fields,
                                        1e-8, "balayage"));
    } else if (name == "off_contact") {
      out.push_back(check_off_contact(factory, cfg.pme, grids));
    } else if (name == "positivity_slabs") {
      out.push_back(check_positivity_slabs(fx.grid(), fx.vi().u, -1.0, "obstacle"));
      out.push_back(check_positivity_slabs(fx.grid(), fx.balayage().u, -1.0, "balayage"));
    } else if (name == "barenblatt") {
      out.push_back(check_barenblatt(cfg.pme));
    } else if (name == "minimality") {
      out.push_back(check_minimality(fx.grid(), fx.obstacle(), fx.balayage().u, fx.vi().u, cfg.pme, cfg.seed));
    } else if (name == "caccioppoli") {
      out.push_back(check_caccioppoli(factory, cfg.pme, grids, [d](double x, double y) {
        return tent((x - 0.5) / 0.4) * (d == 2 ? tent((y - 0.5) / 0.4) : 1.0);
      }));
    }
  }
  return out;
}

int finish(const std::vector<VerdictReport>& verdicts, const std::filesystem::path& out_dir, std::ostream& log) {
  io::write_json(out_dir / "verdicts.json", to_json(verdicts));
  print_table(log, verdicts);
  const bool ok = std::all_of(verdicts.begin(), verdicts.end(), [](const VerdictReport& r) { return r.pass(); });
  return ok ? ExitCode::Ok : ExitCode::CheckFailed;
}

}  // namespace

std::vector<VerdictReport> run_checks(const ExperimentConfig& cfg, const std::vector<std::string>& names) {
  FixtureCache fx(cfg);
  return evaluate(cfg, names, fx);
}

int run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  FixtureCache fx(cfg);
  const Grid& grid = fx.grid();
  const auto& obs = fx.obstacle();
  const auto& vi = fx.vi();
  const auto& bal = fx.balayage();

  io::write_field_csv(out_dir / "psi.csv", grid, obs.psi);
  io::write_sidecar(out_dir / "psi.csv", grid, "obstacle");
  io::write_field_csv(out_dir / "u_obstacle.csv", grid, vi.u);
  io::write_sidecar(out_dir / "u_obstacle.csv", grid, "variational obstacle solution");
  io::write_field_csv(out_dir / "u_balayage.csv", grid, bal.u);
  io::write_sidecar(out_dir / "u_balayage.csv", grid, "minimal supersolution above the obstacle");
  io::write_mask_csv(out_dir / "contact.csv", grid, vi.contact);
  io::write_sidecar(out_dir / "contact.csv", grid, "contact set of the obstacle solution");
  io::write_json(out_dir / "report_obstacle.json", io::to_json(vi.report));
  io::write_json(out_dir / "report_balayage.json", io::to_json(bal.report));
  io::write_trace_csv(out_dir / "balayage_trace.csv", bal.report.sweep_decrements);

  const double e = (vi.u - bal.u).cwiseAbs().maxCoeff();
  char line[256];
  std::snprintf(line, sizeof line,
                "grid d=%d nx=%lld nt=%lld  contact nodes %lld  balayage sweeps %lld  |u_obstacle - u_balayage| = %.3e\n",
                grid.dim(), static_cast<long long>(grid.nx()), static_cast<long long>(grid.nt()),
                static_cast<long long>(vi.report.contact_nodes), static_cast<long long>(bal.report.sweeps), e);
  log << line;
  io::write_json(out_dir / "summary.json", {{"grid", io::grid_metadata(grid)},
                                            {"sup_psi", obs.sup()},
                                            {"difference_sup", e},
                                            {"contact_nodes", vi.report.contact_nodes},
                                            {"balayage_sweeps", bal.report.sweeps}});
  if (cfg.checks.names.empty()) return ExitCode::Ok;
  return finish(evaluate(cfg, cfg.checks.names, fx), out_dir, log);
}

int verify(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  const auto& names = cfg.checks.names.empty() ? known_checks() : cfg.checks.names;
  return finish(run_checks(cfg, names), out_dir, log);
}

int convergence(const ExperimentConfig& cfg, int levels, const std::filesystem::path& out_dir, std::ostream& log) {
  if (levels < 2) throw ConfigError("--levels", "must be >= 2");
  const auto grids = refinement_sequence(cfg.checks.base, levels);
  const ObstacleFactory factory = [&cfg](const Grid& g) { return make_obstacle(g, cfg.obstacle); };
  std::vector<VerdictReport> verdicts{
      check_coincidence(factory, cfg.pme, grids, cfg.checks.coincidence_tol, cfg.balayage),
      check_off_contact(factory, cfg.pme, grids)};

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir / "convergence.csv");
  csv << "level,nx,ny,nt,difference_sup,off_contact_residual\n";
  for (std::size_t k = 0; k < grids.size(); ++k) {
    char buf[200];
    const std::string idx = "[" + std::to_string(k) + "]";
    std::snprintf(buf, sizeof buf, "%zu,%lld,%lld,%lld,%.17g,%.17g\n", k, static_cast<long long>(grids[k].nx),
                  static_cast<long long>(grids[k].ny), static_cast<long long>(grids[k].nt),
                  verdicts[0].value("e" + idx), verdicts[1].value("residual" + idx));
    csv << buf;
  }
  return finish(verdicts, out_dir, log);
}

}  // namespace pmeobs
