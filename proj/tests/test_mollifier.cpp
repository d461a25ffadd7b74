#include <cmath>
#include <random>

#include <doctest.h>

#include "pmeobs/mollifier.hpp"
#include "support/oracles.hpp"

using namespace pmeobs;
using Grid = SpaceTimeGrid<double>;

namespace {

MollifierParams<double> params(const Grid& g, double h, double v0 = 0.0) {
  return {h, Slice<double>::Constant(g.slice_size(), v0)};
}

/// Continuous space-time sample with a smooth random time profile per node.
Field<double> smooth_random(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Field<double> v(g.slice_size(), g.time_points());
  for (Index n = 0; n < g.slice_size(); ++n) {
    const double a = U(rng), b = U(rng), c = U(rng), w = 2.0 + 3.0 * std::abs(U(rng));
    for (Index k = 0; k < g.time_points(); ++k) {
      const double t = g.t(k);
      v(n, k) = a + b * std::sin(w * t) + c * t * t;
    }
  }
  return v;
}

}  // namespace

TEST_CASE("constants are fixed points") {
  const auto g = Grid::line(4, 50, 1.0);
  const Field<double> v = Field<double>::Constant(g.slice_size(), g.time_points(), 2.5);
  const Field<double> m = mollify(g, v, params(g, 0.1, 2.5));
  CHECK((m.array() - 2.5).abs().maxCoeff() <= 1e-14);
  CHECK(mollifier_identity_residual(g, v, params(g, 0.1, 2.5)) <= 1e-14);
}

TEST_CASE("initial slice is the prescribed data") {
  const auto g = Grid::line(3, 10, 1.0);
  std::mt19937_64 rng(4);
  const Field<double> v = smooth_random(g, rng);
  MollifierParams<double> p{0.2, v.col(0) * 3.0};
  const Field<double> m = mollify(g, v, p);
  CHECK((m.col(0) - p.initial).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear data matches the closed form and quadrature") {
  const double h = 0.25;
  const auto g = Grid::line(1, 400, 2.0);
  const Field<double> v = g.sample_field([](double, double, double t) { return t; });
  const Field<double> m = mollify(g, v, params(g, h));
  for (Index k = 0; k < g.time_points(); ++k) {
    const double t = g.t(k);
    const double exact = t - h * (1.0 - std::exp(-t / h));
    CHECK(m(1, k) == doctest::Approx(exact).epsilon(1e-12).scale(1.0));
  }
  for (Index k : {17, 133, 400}) {
    const double t = g.t(k);
    const double q = oracle::mollify_quadrature([](double s) { return s; }, 0.0, h, t, 200000);
    CHECK(m(1, k) == doctest::Approx(q).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("nonlinear data matches fine quadrature up to interpolation error") {
  const double h = 0.1;
  const auto g = Grid::line(1, 4000, 1.0);
  auto f = [](double t) { return std::sin(7.0 * t) + t * t; };
  const Field<double> v = g.sample_field([&](double, double, double t) { return f(t); });
  const Field<double> m = mollify(g, v, params(g, h, 0.3));
  for (Index k : {100, 1000, 2500, 4000}) {
    const double q = oracle::mollify_quadrature(f, 0.3, h, g.t(k), 400000);
    CHECK(std::abs(m(1, k) - q) <= 1e-6);
  }
}

TEST_CASE("identity residual for linear data is truncation only") {
  const double h = 1.0;
  const auto g = Grid::line(1, 100000, 1.0);
  const Field<double> v = g.sample_field([](double, double, double t) { return t; });
  const double r = mollifier_identity_residual(g, v, params(g, h));
  const double bound = g.dt() * g.dt() / (6.0 * h * h);
  CHECK(r <= 1.01 * bound + 1e-13);
}

TEST_CASE("identity residual converges at second order for smooth data") {
  std::vector<double> res;
  for (Index nt : {50, 100, 200, 400}) {
    const auto g = Grid::line(2, nt, 1.0);
    std::mt19937_64 rng(9);
    const Field<double> v = smooth_random(g, rng);
    res.push_back(mollifier_identity_residual(g, v, {0.1, v.col(0)}));
  }
  for (std::size_t i = 0; i + 1 < res.size(); ++i) CHECK(std::log2(res[i] / res[i + 1]) >= 1.8);
}

TEST_CASE("mollification is order preserving") {
  const auto g = Grid::line(5, 60, 1.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Field<double> w = smooth_random(g, rng);
    Field<double> v = w;
    for (Index k = 0; k < v.cols(); ++k)
      for (Index n = 0; n < v.rows(); ++n) v(n, k) += U(rng);
    const Field<double> mv = mollify(g, v, {0.05, v.col(0)});
    const Field<double> mw = mollify(g, w, {0.05, w.col(0)});
    CHECK((mv - mw).minCoeff() >= -1e-14);
  }
}

TEST_CASE("mollification stays within the data bounds") {
  const auto g = Grid::line(5, 80, 1.0);
  std::mt19937_64 rng(33);
  const Field<double> v = smooth_random(g, rng);
  const Field<double> m = mollify(g, v, {0.05, v.col(0)});
  CHECK(m.maxCoeff() <= v.maxCoeff() + 1e-14);
  CHECK(m.minCoeff() >= v.minCoeff() - 1e-14);
}

TEST_CASE("mollification approaches the data as h shrinks") {
  const auto g = Grid::line(3, 20000, 1.0);
  const Field<double> v = g.sample_field([](double x, double, double t) { return std::cos(3 * t) + x; });
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {0.1, 0.01, 0.001}) {
    const Field<double> m = mollify(g, v, {h, v.col(0)});
    const double dist = std::sqrt(integrate_field(g, Field<double>((m - v).array().square().matrix())));
    CHECK(dist < prev);
    prev = dist;
    // first order in h: |v_t|_{L2} = sqrt(9 (1/2 - sin(6)/12))
    CHECK(dist <= 1.1 * h * std::sqrt(9.0 * (0.5 - std::sin(6.0) / 12.0)));
  }
}

TEST_CASE("mollify rejects bad input") {
  const auto g = Grid::line(3, 10, 1.0);
  const Field<double> v = g.zero_field();
  CHECK_THROWS_AS(mollify(g, v, params(g, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(mollify(g, v, params(g, -1.0)), std::invalid_argument);
  CHECK_THROWS_AS(mollify(g, Field<double>(g.zero_field().leftCols(3)), params(g, 0.1)), std::invalid_argument);
  CHECK_THROWS_AS(mollify(g, v, {0.1, Slice<double>::Zero(2)}), std::invalid_argument);
}
