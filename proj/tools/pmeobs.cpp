// Batch front end: pmeobs run|verify|convergence <config.json>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pmeobs/config.hpp"
#include "pmeobs/report.hpp"
#include "pmeobs/runner.hpp"

namespace {

std::filesystem::path output_dir(const pmeobs::ExperimentConfig& cfg) {
  if (const char* env = std::getenv("PMEOBS_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Obstacle problem for the fast-diffusion porous medium equation"};
  app.require_subcommand(1);

  std::string config_path;
  int levels = 3;
  auto* run = app.add_subcommand("run", "solve the configured fixture and write fields and reports");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  auto* verify = app.add_subcommand("verify", "run the configured checks (all by default)");
  verify->add_option("config", config_path, "experiment config (JSON)")->required();
  auto* conv = app.add_subcommand("convergence", "refinement study of the two obstacle solutions");
  conv->add_option("config", config_path, "experiment config (JSON)")->required();
  conv->add_option("--levels", levels, "number of grids")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pmeobs::ExitCode::BadConfig;
  }

  try {
    const auto cfg = pmeobs::load_config(config_path);
    const auto out = output_dir(cfg);
    if (run->parsed()) return pmeobs::run(cfg, out, std::cout);
    if (verify->parsed()) return pmeobs::verify(cfg, out, std::cout);
    return pmeobs::convergence(cfg, levels, out, std::cout);
  } catch (const pmeobs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pmeobs::ExitCode::BadConfig;
  } catch (const pmeobs::SolverError& e) {
    std::cerr << "solver failure [" << pmeobs::to_string(e.kind()) << "]: " << e.what() << "\n";
    return pmeobs::ExitCode::SolverFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pmeobs::ExitCode::SolverFailed;
  }
}
