#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pmeobs/balayage.hpp"
#include "pmeobs/grid.hpp"
#include "pmeobs/mollifier.hpp"
#include "pmeobs/obstacle.hpp"
#include "pmeobs/pme.hpp"

namespace pmeobs {

using Grid = SpaceTimeGrid<double>;
using Rng = std::mt19937_64;

enum class Relation { LessEqual, GreaterEqual };

/// One recorded comparison `value relation threshold`.
struct Condition {
  std::string quantity;
  double value = 0.0;
  Relation relation = Relation::LessEqual;
  double threshold = 0.0;

  bool holds() const;
};

/// Outcome of one property check. `pass()` is recomputed from the stored
/// conditions, so a report read back from JSON gives the same verdict.
struct VerdictReport {
  std::string check;
  std::string property;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<Condition> conditions;
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json details = nlohmann::json::object();

  bool pass() const;
  double value(const std::string& name) const;
  void measure(std::string name, double v) { measured.emplace_back(std::move(name), v); }
  void require(std::string quantity, double v, Relation rel, double threshold) {
    conditions.push_back({std::move(quantity), v, rel, threshold});
  }
};

nlohmann::json to_json(const VerdictReport& r);
VerdictReport verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<VerdictReport>& reports);
void print_table(std::ostream& os, const std::vector<VerdictReport>& reports);

struct GridSpec {
  int d = 1;
  Index nx = 101;
  Index ny = 0;
  Index nt = 200;
  double T = 1.0;

  Grid make() const { return Grid(d, nx, ny, nt, T); }
  /// Next level: interior counts 2n - 1 per axis (spacing roughly halved), 2 nt steps.
  GridSpec refined() const;
};

nlohmann::json to_json(const GridSpec& g);

/// `levels` grids starting at `base`, each the refinement of the previous.
std::vector<GridSpec> refinement_sequence(const GridSpec& base, int levels);

using ObstacleFactory = std::function<Obstacle<double>(const Grid&)>;

/// Observed orders log2(e_k / e_{k+1}) between consecutive levels.
std::vector<double> observed_orders(const std::vector<double>& errors);

// ---- test-field generators ----

/// Smooth nonnegative space-time field vanishing on the parabolic boundary
/// and the top slice: a tent, a clipped Gaussian or a product of coordinate
/// bumps in space, times a bump in time.
Field<double> random_test_field(const Grid& grid, Rng& rng);

/// Compactly supported nonnegative bump A B(x) tau(t) with random centre,
/// radius, amplitude and time window.
Field<double> random_bump_field(const Grid& grid, Rng& rng, double max_amplitude);

// ---- checks ----

/// Runs both obstacle solvers on every grid and compares them in sup norm.
VerdictReport check_coincidence(const ObstacleFactory& make, const PmeParameters<double>& p,
                                const std::vector<GridSpec>& grids, double tol_rel = 1e-2,
                                const BalayageOptions<double>& opt = {});

/// Ordered boundary/initial data g <= g' must give ordered free solutions.
VerdictReport check_comparison(const PmeParameters<double>& p, const Grid& grid, std::uint64_t seed,
                               int pairs = 20, double slack = 1e-10);

/// Ordered obstacles psi_1 <= psi_2 must give ordered obstacle solutions.
VerdictReport check_obstacle_monotonicity(const PmeParameters<double>& p, const Grid& grid,
                                          std::uint64_t seed, int pairs = 20, double slack = 1e-10);

/// int int xi^2 |grad u^m|^2 / (M^{2m} T int |grad xi|^2 + M^{m+1} int xi^2),
/// M = sup u.
double caccioppoli_ratio(const Grid& grid, const Field<double>& u, const Slice<double>& xi, double m);

/// Caccioppoli ratio for the obstacle solution on each grid; bounded by twice
/// its value on the coarsest grid.
VerdictReport check_caccioppoli(const ObstacleFactory& make, const PmeParameters<double>& p,
                                const std::vector<GridSpec>& grids,
                                const std::function<double(double, double)>& xi);

/// Identity R(u/(1+eps)) - R(u)/(1+eps) = -Lap f, f = c_eps u^m,
/// c_eps = (1 - (1+eps)^{m-1})/(1+eps)^m, with R the scheme residual.
/// Relative defect per eps.
double scaled_source_defect(const Grid& grid, const Field<double>& u, double m, double eps);
double scaled_source_coefficient(double m, double eps);
VerdictReport check_scaled_source(const Grid& grid, const Field<double>& u, double m,
                                  const std::vector<double>& eps, double tol = 1e-12);

/// Maximal runs [first, last] of slice indices whose interior is positive.
std::vector<std::pair<Index, Index>> positivity_slabs(const Grid& grid, const Field<double>& u);
/// Per slice: (interior max > theta) implies (interior min > 0).
/// theta <= 0 selects 1e-8 sup u.
VerdictReport check_positivity_slabs(const Grid& grid, const Field<double>& u, double theta = -1.0,
                                     const std::string& label = "u");

/// Mollifier identity on v(t) = t against the closed form, plus the
/// refinement order of the identity residual for smooth random v.
VerdictReport check_mollifier(std::uint64_t seed);

/// min over `count` random nonnegative test fields of the weak residual of u
/// divided by sup phi; expected >= -tol.
VerdictReport check_supersolution(const Grid& grid, const Field<double>& u, double m, std::uint64_t seed,
                                  int count = 100, double tol = 1e-8, const std::string& label = "u");

/// Weak residual of the obstacle solution against fixed test fields supported
/// away from the contact set; must decrease under refinement.
VerdictReport check_off_contact(const ObstacleFactory& make, const PmeParameters<double>& p,
                                const std::vector<GridSpec>& grids, double min_order = 0.7);

/// L^inf error of the free solver against the source-type solution under
/// simultaneous halving of dx and dt.
VerdictReport check_barenblatt(const PmeParameters<double>& p, int levels = 3);

/// The balayage output is below every sampled competitor above psi, below
/// sup psi, and zero while psi has not yet become positive.
VerdictReport check_minimality(const Grid& grid, const Obstacle<double>& obs, const Field<double>& u_bal,
                               const Field<double>& u_vi, const PmeParameters<double>& p,
                               std::uint64_t seed, int competitors = 12);

}  // namespace pmeobs
