#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pmeobs {

/// Failure raised by the nonlinear solvers.
class SolverError : public std::runtime_error {
public:
  enum class Kind { NewtonDiverged, NegativeValue, SolverDiverged, InfeasibleObstacle, NoConvergence };

  SolverError(Kind kind, const std::string& what, long step = -1)
      : std::runtime_error(what), kind_(kind), step_(step) {}

  Kind kind() const { return kind_; }
  /// Time-step index at which the failure happened, or -1.
  long step() const { return step_; }

  SolverError at_step(long step) const {
    return SolverError(kind_, std::string(what()) + " (step " + std::to_string(step) + ")", step);
  }

private:
  Kind kind_;
  long step_;
};

inline const char* to_string(SolverError::Kind k) {
  switch (k) {
    case SolverError::Kind::NewtonDiverged: return "NewtonDiverged";
    case SolverError::Kind::NegativeValue: return "NegativeValue";
    case SolverError::Kind::SolverDiverged: return "SolverDiverged";
    case SolverError::Kind::InfeasibleObstacle: return "InfeasibleObstacle";
    case SolverError::Kind::NoConvergence: return "NoConvergence";
  }
  return "Unknown";
}

/// Per-run diagnostics shared by the free, obstacle and balayage solvers.
struct SolveReport {
  Eigen::Index steps = 0;
  std::vector<int> newton_iters;  // per time step
  double max_residual = 0.0;
  double wallclock = 0.0;  // seconds; excluded from reproducibility comparisons

  // obstacle problem
  double complementarity_residual = 0.0;
  Eigen::Index contact_nodes = 0;

  // balayage iteration
  Eigen::Index sweeps = 0;
  std::vector<double> sweep_decrements;
};

}  // namespace pmeobs
