#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "pmeobs/pme.hpp"
#include "pmeobs/verification.hpp"
#include "support/oracles.hpp"

using namespace pmeobs;
using Vec = Slice<double>;

namespace {

double l1_interior(const Grid& g, const Vec& v) {
  double s = 0.0;
  for (Index n : g.interior()) s += g.node_volume(n) * std::abs(v[n]);
  return s;
}

Vec random_nonneg(const Grid& g, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> U(0.0, scale);
  Vec v(g.slice_size());
  for (Index n = 0; n < g.slice_size(); ++n) v[n] = U(rng);
  return v;
}

BoundaryData<double> bump_initial(const Grid& g, double amp) {
  return BoundaryData<double>::sample(g, [&](double x, double y, double t) {
    if (t > 0.0) return 0.0;
    const double s = std::sin(std::numbers::pi * x) * (g.dim() == 2 ? std::sin(std::numbers::pi * y) : 1.0);
    return amp * s * s;
  });
}

}  // namespace

TEST_CASE("zero data stays zero") {
  const auto g = Grid::line(8, 4, 1.0);
  const PmeParameters<double> p;
  const auto step = pme_step<double>(g, g.zero_slice(), g.zero_slice(), p, g.dt());
  CHECK(step.u.cwiseAbs().maxCoeff() == 0.0);
  const auto sol = pme_solve(g, BoundaryData<double>::zero(g), p);
  CHECK(sol.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.report.steps == 4);
}

TEST_CASE("constant data is stationary") {
  for (const auto& g : {Grid::line(10, 5, 1.0), Grid::square(5, 4, 3, 0.5)}) {
    const PmeParameters<double> p;
    const auto sol = pme_solve(g, BoundaryData<double>::sample(g, [](double, double, double) { return 0.7; }), p);
    CHECK((sol.u.array() - 0.7).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("boundary values are copied exactly") {
  const auto g = Grid::line(6, 1, 1.0);
  std::mt19937_64 rng(1);
  const Vec prev = random_nonneg(g, rng, 1.0);
  const Vec bdry = random_nonneg(g, rng, 2.0);
  const auto step = pme_step<double>(g, prev, bdry, {}, g.dt());
  CHECK(step.u[0] == bdry[0]);
  CHECK(step.u[g.slice_size() - 1] == bdry[g.slice_size() - 1]);
}

TEST_CASE("step solves the implicit equation against the oracle residual") {
  std::mt19937_64 rng(2);
  for (const auto& g : {Grid::line(12, 1, 1.0), Grid::square(5, 6, 1, 1.0)}) {
    const Vec prev = random_nonneg(g, rng, 1.0);
    Vec bdry = random_nonneg(g, rng, 0.5);
    const double m = 0.4;
    const auto step = pme_step<double>(g, prev, bdry, {.m = m}, 0.01);
    const Vec w = detail::pow_slice(step.u, m);
    for (Index n : g.interior()) CHECK(std::abs(step.u[n] - prev[n] - 0.01 * oracle::laplacian_at(g, w, n)) <= 1e-9);
  }
}

TEST_CASE("step agrees with the dense oracle solve") {
  const auto g = Grid::square(3, 3, 1, 1.0);
  std::mt19937_64 rng(4);
  const Vec prev = random_nonneg(g, rng, 1.0);
  const Vec bdry = random_nonneg(g, rng, 0.3);
  const auto step = pme_step<double>(g, prev, bdry, {.m = 0.6, .newton_tol = 1e-13}, 0.05);
  Vec w = detail::pow_slice(bdry, 0.6);
  REQUIRE(oracle::dense_free_solve(g, oracle::interior_nodes(g), prev, 0.6, 0.05, w));
  for (Index n : g.interior()) CHECK(step.u[n] == doctest::Approx(std::pow(w[n], 1 / 0.6)).epsilon(1e-10));
}

TEST_CASE("step is order preserving") {
  std::mt19937_64 rng(7);
  const auto g = Grid::line(20, 1, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec a = random_nonneg(g, rng, 1.0);
    const Vec b = a + random_nonneg(g, rng, 0.5);
    const Vec ga = random_nonneg(g, rng, 0.2);
    const Vec gb = ga + random_nonneg(g, rng, 0.2);
    const auto sa = pme_step<double>(g, a, ga, {}, 0.02);
    const auto sb = pme_step<double>(g, b, gb, {}, 0.02);
    CHECK((sb.u - sa.u).minCoeff() >= -1e-10);
  }
}

TEST_CASE("L1 distance between solutions with equal lateral data does not grow") {
  const auto g = Grid::line(30, 40, 0.5);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    auto d1 = BoundaryData<double>::zero(g);
    auto d2 = BoundaryData<double>::zero(g);
    d1.values.col(0) = random_nonneg(g, rng, 1.0);
    d2.values.col(0) = random_nonneg(g, rng, 1.0);
    for (Index n = 0; n < g.slice_size(); ++n)
      if (g.on_lateral(n)) d1.values(n, 0) = d2.values(n, 0) = 0.0;
    const PmeParameters<double> p{.newton_tol = 1e-13};
    const auto s1 = pme_solve(g, d1, p);
    const auto s2 = pme_solve(g, d2, p);
    double prev = l1_interior(g, s1.u.col(0) - s2.u.col(0));
    for (Index k = 1; k <= g.nt(); ++k) {
      const double cur = l1_interior(g, s1.u.col(k) - s2.u.col(k));
      CHECK(cur <= prev + 1e-10);
      prev = cur;
    }
  }
}

TEST_CASE("positive initial data stays positive inside") {
  const auto g = Grid::square(9, 9, 20, 0.2);
  const auto sol = pme_solve(g, bump_initial(g, 1.0), {});
  for (Index k = 1; k <= g.nt(); ++k) CHECK(interior_extrema(g, sol.u.col(k)).second > 0.0);
}

TEST_CASE("source solution satisfies the equation pointwise") {
  for (double m : {0.3, 0.5, 0.8}) {
    const Barenblatt<double> B(m, 1, 0.7);
    auto U = [&](double x, double t) { return B(x * x, t); };
    std::mt19937_64 rng(static_cast<std::uint64_t>(m * 100));
    std::uniform_real_distribution<double> X(-1.0, 1.0), T(0.2, 2.0);
    for (int i = 0; i < 20; ++i) {
      const double x = X(rng), t = T(rng);
      const double h = 1e-3;
      const double ut = oracle::d1_6([&](double s) { return U(x, s); }, t, h);
      const double lap = oracle::d2_6([&](double s) { return std::pow(U(s, t), m); }, x, h);
      CHECK(std::abs(ut - lap) <= 1e-6 * std::max(1.0, std::abs(ut)));
    }
  }
  const Barenblatt<double> B2(0.5, 2, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> X(-1.0, 1.0), T(0.2, 2.0);
  for (int i = 0; i < 20; ++i) {
    const double x = X(rng), y = X(rng), t = T(rng), h = 1e-3;
    auto W = [&](double a, double b) { return std::pow(B2(a * a + b * b, t), 0.5); };
    const double ut = oracle::d1_6([&](double s) { return B2(x * x + y * y, s); }, t, h);
    const double lap = oracle::d2_6([&](double s) { return W(s, y); }, x, h) +
                       oracle::d2_6([&](double s) { return W(x, s); }, y, h);
    CHECK(std::abs(ut - lap) <= 1e-6 * std::max(1.0, std::abs(ut)));
  }
}

TEST_CASE("source solution is radial and carries the prescribed mass") {
  const double m = 0.5, mass = 0.3;
  const Barenblatt<double> B(m, 1, mass);
  const double xs[] = {0.2};
  const double xsn[] = {-0.2};
  CHECK(barenblatt<double>(xs, 0.5, m, mass) == barenblatt<double>(xsn, 0.5, m, mass));
  for (double t : {0.1, 1.0, 3.0}) {
    const int n = 400000;
    const double L = 400.0, h = 2 * L / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = -L + i * h;
      s += (i == 0 || i == n ? 0.5 : 1.0) * B(x * x, t);
    }
    CHECK(s * h == doctest::Approx(mass).epsilon(1e-4));
  }
  const Barenblatt<double> B2(0.6, 2, 1.5);
  const int n = 4000;
  const double R = 2000.0, dr = R / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * dr;
    s += 2 * std::numbers::pi * r * B2(r * r, 1.0) * dr;
  }
  CHECK(s == doctest::Approx(1.5).epsilon(1e-2));
  CHECK_THROWS_AS(Barenblatt<double>(1.0, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Barenblatt<double>(0.5, 1, -1.0), std::invalid_argument);
}

TEST_CASE("free solver converges to the source solution") {
  const auto v = check_barenblatt({});
  CHECK(v.pass());
  CHECK(v.value("error[1]") < v.value("error[0]"));
  CHECK(v.value("error[2]") < v.value("error[1]"));
}

TEST_CASE("weak residual of a constant vanishes for both quadratures") {
  const auto g = Grid::line(20, 30, 1.0);
  Rng rng(5);
  const Field<double> u = Field<double>::Constant(g.slice_size(), g.time_points(), 0.4);
  for (int i = 0; i < 10; ++i) {
    const Field<double> phi = random_test_field(g, rng);
    CHECK(std::abs(weak_residual(g, u, phi, 0.5, WeakForm::Scheme)) <= 1e-12);
    CHECK(std::abs(weak_residual(g, u, phi, 0.5, WeakForm::Trapezoidal)) <= 1e-12);
  }
}

TEST_CASE("scheme-form weak residual of a computed solution is solver noise") {
  for (const auto& g : {Grid::line(30, 40, 0.5), Grid::square(9, 9, 10, 0.2)}) {
    const auto sol = pme_solve(g, bump_initial(g, 1.0), {});
    Rng rng(6);
    for (int i = 0; i < 10; ++i) {
      const Field<double> phi = random_test_field(g, rng);
      CHECK(std::abs(weak_residual(g, sol.u, phi, 0.5)) <= 1e-9 * phi.maxCoeff());
    }
    const Field<double> r = scheme_residual(g, sol.u, 0.5);
    CHECK(r.cwiseAbs().maxCoeff() * g.dt() <= 1e-9);
  }
}

TEST_CASE("trapezoidal weak residual of computed solutions shrinks under refinement") {
  std::vector<double> res;
  for (Index lvl = 0; lvl < 3; ++lvl) {
    const Index nx = 10 * (1 << lvl) + (1 << lvl) - 1, nt = 20 * (1 << lvl);
    const auto g = Grid::line(nx, nt, 0.5);
    const auto sol = pme_solve(g, bump_initial(g, 1.0), {});
    const Field<double> phi = g.sample_field([](double x, double, double t) {
      return std::pow(std::sin(std::numbers::pi * x), 2) * std::pow(std::sin(2 * std::numbers::pi * t), 2);
    });
    res.push_back(std::abs(weak_residual(g, sol.u, phi, 0.5, WeakForm::Trapezoidal)));
  }
  CHECK(res[1] < res[0]);
  CHECK(res[2] < res[1]);
}

TEST_CASE("invalid parameters and data are rejected") {
  const auto g = Grid::line(5, 3, 1.0);
  CHECK_THROWS_AS(pme_step<double>(g, g.zero_slice(), g.zero_slice(), {.m = 1.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(pme_step<double>(g, g.zero_slice(), g.zero_slice(), {.m = 0.0}, 0.1), std::invalid_argument);
  Vec bad = g.zero_slice();
  bad[2] = -1.0;
  CHECK_THROWS_AS(pme_step<double>(g, bad, g.zero_slice(), {}, 0.1), std::invalid_argument);
  bad[2] = std::nan("");
  CHECK_THROWS_AS(pme_step<double>(g, bad, g.zero_slice(), {}, 0.1), std::invalid_argument);
}

TEST_CASE("Newton failure is reported with its kind and step") {
  const auto g = Grid::line(30, 5, 1.0);
  const PmeParameters<double> p{.newton_tol = 1e-15, .newton_max_iter = 1};
  try {
    pme_solve(g, bump_initial(g, 5.0), p);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::NewtonDiverged);
    CHECK(e.step() == 1);
  }
}
