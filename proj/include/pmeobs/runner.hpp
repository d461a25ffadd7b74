#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmeobs/config.hpp"
#include "pmeobs/verification.hpp"

namespace pmeobs {

enum ExitCode : int { Ok = 0, CheckFailed = 1, BadConfig = 2, SolverFailed = 3 };

/// Solves the configured fixture with both obstacle solvers, writes fields,
/// reports and the balayage trace to `out_dir`, then runs the checks named in
/// the config. Returns Ok or CheckFailed; solver errors propagate.
int run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Runs the configured checks (all of them when none are named), writes
/// verdicts.json and prints a table.
int verify(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Coincidence and off-contact studies over `levels` grids starting at the
/// refinement base; writes convergence.csv and verdicts.json.
int convergence(const ExperimentConfig& cfg, int levels, const std::filesystem::path& out_dir, std::ostream& log);

/// Evaluates the named checks for the config, in the order of known_checks().
std::vector<VerdictReport> run_checks(const ExperimentConfig& cfg, const std::vector<std::string>& names);

}  // namespace pmeobs
