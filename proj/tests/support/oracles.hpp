#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pmeobs/grid.hpp"

namespace oracle {

using pmeobs::Index;
using Vec = Eigen::VectorXd;
using Grid = pmeobs::SpaceTimeGrid<double>;

/// Dense five-point (or three-point) Laplacian applied at interior node n,
/// written out from the grid coordinates without the library stencil.
inline double laplacian_at(const Grid& g, const Vec& w, Index n) {
  const Index px = g.points_x();
  const Index i = n % px, j = n / px;
  double s = (w[j * px + i - 1] - 2 * w[n] + w[j * px + i + 1]) / (g.dx() * g.dx());
  if (g.dim() == 2) s += (w[(j - 1) * px + i] - 2 * w[n] + w[(j + 1) * px + i]) / (g.dy() * g.dy());
  return s;
}

/// Interior node ids in storage order.
inline std::vector<Index> interior_nodes(const Grid& g) {
  std::vector<Index> out;
  for (Index n = 0; n < g.slice_size(); ++n)
    if (!g.on_lateral(n)) out.push_back(n);
  return out;
}

/// Solves w^{1/m} - u_prev - dt Lap w = 0 on the nodes in `free_nodes`, all
/// other entries of w fixed. Plain Newton from a constant upper start with a
/// dense LU; returns false if it fails to settle.
inline bool dense_free_solve(const Grid& g, const std::vector<Index>& free_nodes, const Vec& u_prev, double m,
                             double dt, Vec& w) {
  const Index k = static_cast<Index>(free_nodes.size());
  if (k == 0) return true;
  double top = w.maxCoeff();
  for (Index n : free_nodes) top = std::max(top, std::pow(std::max(u_prev[n], 0.0), m));
  for (Index n : free_nodes) w[n] = top + 1.0;
  std::vector<Index> pos(static_cast<std::size_t>(g.slice_size()), -1);
  for (Index r = 0; r < k; ++r) pos[static_cast<std::size_t>(free_nodes[static_cast<std::size_t>(r)])] = r;
  const Index px = g.points_x();
  for (int it = 0; it < 200; ++it) {
    Vec F(k);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(k, k);
    for (Index r = 0; r < k; ++r) {
      const Index n = free_nodes[static_cast<std::size_t>(r)];
      const double wn = std::max(w[n], 0.0);
      F[r] = std::pow(wn, 1.0 / m) - u_prev[n] - dt * laplacian_at(g, w, n);
      const double cx = dt / (g.dx() * g.dx());
      const double cy = g.dim() == 2 ? dt / (g.dy() * g.dy()) : 0.0;
      J(r, r) = std::pow(std::max(wn, 1e-300), 1.0 / m - 1.0) / m + 2 * cx + 2 * cy;
      const Index nb[4] = {n - 1, n + 1, n - px, n + px};
      const double cf[4] = {cx, cx, cy, cy};
      for (int q = 0; q < (g.dim() == 2 ? 4 : 2); ++q) {
        const Index c = pos[static_cast<std::size_t>(nb[q])];
        if (c >= 0) J(r, c) -= cf[q];
      }
    }
    const Vec d = J.partialPivLu().solve(-F);
    for (Index r = 0; r < k; ++r) w[free_nodes[static_cast<std::size_t>(r)]] += d[r];
    if (d.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + w.cwiseAbs().maxCoeff())) return true;
  }
  return false;
}

/// One implicit obstacle step by exhaustive enumeration of contact sets:
/// returns u = w^{1/m} of the unique feasible candidate, or nothing when no
/// candidate is feasible. Lateral entries of w are bdry^m.
inline std::optional<Vec> enumerate_obstacle_step(const Grid& g, const Vec& u_prev, const Vec& psi, const Vec& bdry,
                                                  double m, double dt, int* feasible_count = nullptr) {
  const auto nodes = interior_nodes(g);
  const std::size_t k = nodes.size();
  if (k > 20) throw std::invalid_argument("enumeration limited to 20 nodes");
  std::optional<Vec> found;
  int feasible = 0;
  const double tol = 1e-11 * (1.0 + psi.cwiseAbs().maxCoeff() + u_prev.cwiseAbs().maxCoeff());
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    Vec w(g.slice_size());
    for (Index n = 0; n < g.slice_size(); ++n) w[n] = std::pow(std::max(bdry[n], 0.0), m);
    std::vector<Index> free_nodes;
    for (std::size_t r = 0; r < k; ++r) {
      const Index n = nodes[r];
      if (mask & (1u << r)) w[n] = std::pow(psi[n], m);
      else free_nodes.push_back(n);
    }
    if (!dense_free_solve(g, free_nodes, u_prev, m, dt, w)) continue;
    bool ok = true;
    for (std::size_t r = 0; r < k && ok; ++r) {
      const Index n = nodes[r];
      const double F = std::pow(std::max(w[n], 0.0), 1.0 / m) - u_prev[n] - dt * laplacian_at(g, w, n);
      if (mask & (1u << r)) ok = F >= -tol;
      else ok = std::pow(std::max(w[n], 0.0), 1.0 / m) >= psi[n] - tol;
    }
    if (!ok) continue;
    ++feasible;
    Vec u(g.slice_size());
    for (Index n = 0; n < g.slice_size(); ++n) u[n] = std::pow(std::max(w[n], 0.0), 1.0 / m);
    if (!found) found = u;
  }
  if (feasible_count) *feasible_count = feasible;
  return found;
}

/// Sixth-order central first derivative of f at x with spacing h.
inline double d1_6(const std::function<double(double)>& f, double x, double h) {
  return (-f(x - 3 * h) + 9 * f(x - 2 * h) - 45 * f(x - h) + 45 * f(x + h) - 9 * f(x + 2 * h) + f(x + 3 * h)) /
         (60 * h);
}

/// Sixth-order central second derivative.
inline double d2_6(const std::function<double(double)>& f, double x, double h) {
  return (2 * f(x - 3 * h) - 27 * f(x - 2 * h) + 270 * f(x - h) - 490 * f(x) + 270 * f(x + h) - 27 * f(x + 2 * h) +
          2 * f(x + 3 * h)) /
         (180 * h * h);
}

/// (1/h) int_0^t e^{(s-t)/h} v(s) ds + e^{-t/h} v0 by the composite midpoint
/// rule with n panels.
inline double mollify_quadrature(const std::function<double(double)>& v, double v0, double h, double t, int n) {
  double s = 0.0;
  const double ds = t / n;
  for (int i = 0; i < n; ++i) {
    const double si = (i + 0.5) * ds;
    s += std::exp((si - t) / h) * v(si);
  }
  return std::exp(-t / h) * v0 + s * ds / h;
}

}  // namespace oracle
