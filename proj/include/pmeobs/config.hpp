#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmeobs/balayage.hpp"
#include "pmeobs/obstacle.hpp"
#include "pmeobs/pme.hpp"
#include "pmeobs/verification.hpp"

namespace pmeobs {

/// Invalid experiment configuration; `field()` is the dotted key at fault.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

struct ObstacleSpec {
  /// zero | constant | bump | product-bump | custom-table
  std::string kind = "bump";
  double amplitude = 1.0;
  std::vector<double> center{0.5, 0.5};
  double radius = 0.2;
  double t_begin = -1.0;  // < 0: 0.2 T
  double t_end = -1.0;    // < 0: 0.8 T
  std::filesystem::path table;
  /// Declared compact support; the obstacle is rejected if it is violated.
  bool compact_support = true;
};

struct CheckSpec {
  std::vector<std::string> names;
  int levels = 3;
  GridSpec base;  // coarsest grid of refinement studies
  double coincidence_tol = 1e-2;
  int pairs = 20;
  int test_fields = 100;
  std::vector<double> eps{0.01, 0.1, 0.5, 1.0};
};

struct ExperimentConfig {
  GridSpec grid;
  ObstacleSpec obstacle;
  PmeParameters<double> pme;
  BalayageOptions<double> balayage;
  CheckSpec checks;
  std::filesystem::path output_dir = "pmeobs-out";
  std::uint64_t seed = 1;
};

/// Every check name understood by the runner, in execution order.
const std::vector<std::string>& known_checks();

/// Parses and validates a config tree. Relative table paths resolve against
/// `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

Obstacle<double> make_obstacle(const Grid& grid, const ObstacleSpec& spec);

}  // namespace pmeobs
