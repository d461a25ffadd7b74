#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "pmeobs/grid.hpp"
#include "pmeobs/obstacle.hpp"
#include "pmeobs/pme.hpp"
#include "pmeobs/report.hpp"

namespace pmeobs {

/// Grid-aligned subcylinder `nodes` x (t_{k_begin}, t_{k_end}]. Its discrete
/// parabolic boundary is the k_begin slice plus the neighbours of `nodes`.
struct Cylinder {
  Index k_begin = 0;
  Index k_end = 1;
  std::vector<Index> nodes;  // interior node ids
};

template <typename Scalar>
struct BalayageState {
  Field<Scalar> current;
  Index iteration = 0;
  std::vector<Cylinder> sweep_cylinders;
  Scalar decrease_norm = std::numeric_limits<Scalar>::infinity();
};

enum class ModifyRule {
  /// Replace by max(h, psi) inside the cylinder.
  Project,
  /// Replace by h only if h >= psi everywhere in the cylinder, else leave it.
  AcceptIfAbove,
};

namespace detail {

/// Poisson modification in place; returns the largest pointwise decrease.
/// The candidate is capped by the current values so the field never grows.
template <typename Scalar>
Scalar modify_in_place(const SpaceTimeGrid<Scalar>& grid, Field<Scalar>& cur, const Cylinder& cyl,
                       const Field<Scalar>& psi, const PmeParameters<Scalar>& p, ModifyRule rule,
                       Scalar accept_tol, std::vector<Index>* rejected = nullptr) {
  const Scalar dt = grid.dt();
  if (cyl.nodes.size() == 1 && cyl.k_end == cyl.k_begin + 1) {
    const Index n = cyl.nodes.front();
    const Index k = cyl.k_end;
    Slice<Scalar> w(grid.slice_size());
    // only the stencil of n is read
    w[n - 1] = pow_m(cur(n - 1, k), p.m);
    w[n + 1] = pow_m(cur(n + 1, k), p.m);
    if (grid.dim() == 2) {
      const Index px = grid.points_x();
      w[n - px] = pow_m(cur(n - px, k), p.m);
      w[n + px] = pow_m(cur(n + px, k), p.m);
    }
    const auto [a, c] = point_coefficients(grid, w, n, cur(n, k - 1), dt);
    const Scalar h = pow_m(point_solve(a, c, p.m), Scalar(1) / p.m);
    if (rule == ModifyRule::AcceptIfAbove && h < psi(n, k) - accept_tol) {
      if (rejected) rejected->push_back(n);
      return Scalar(0);
    }
    const Scalar next = std::min(cur(n, k), std::max(h, psi(n, k)));
    const Scalar dec = cur(n, k) - next;
    cur(n, k) = next;
    return dec;
  }

  std::vector<Index> nodes = cyl.nodes;
  std::sort(nodes.begin(), nodes.end());
  ImplicitSystem<Scalar> sys(grid, nodes, p.m, dt);
  const Index steps = cyl.k_end - cyl.k_begin;
  Field<Scalar> h(grid.slice_size(), steps);
  Slice<Scalar> u_prev = cur.col(cyl.k_begin);
  for (Index s = 0; s < steps; ++s) {
    const Index k = cyl.k_begin + 1 + s;
    Slice<Scalar> w = pow_slice(cur.col(k), p.m);
    newton_solve(sys, u_prev, w, p);
    for (Index n : nodes) {
      h(n, s) = pow_m(w[n], Scalar(1) / p.m);
      u_prev[n] = h(n, s);
    }
  }
  if (rule == ModifyRule::AcceptIfAbove) {
    bool ok = true;
    for (Index s = 0; s < steps; ++s)
      for (Index n : nodes)
        if (h(n, s) < psi(n, cyl.k_begin + 1 + s) - accept_tol) {
          ok = false;
          if (rejected && s == steps - 1) rejected->push_back(n);
        }
    if (!ok) return Scalar(0);
  }
  Scalar dec(0);
  for (Index s = 0; s < steps; ++s) {
    const Index k = cyl.k_begin + 1 + s;
    for (Index n : nodes) {
      const Scalar next = std::min(cur(n, k), std::max(h(n, s), psi(n, k)));
      dec = std::max(dec, cur(n, k) - next);
      cur(n, k) = next;
    }
  }
  return dec;
}

/// Connected components (axis neighbours) of the selected interior nodes.
template <typename Scalar>
std::vector<std::vector<Index>> components(const SpaceTimeGrid<Scalar>& grid,
                                           const std::vector<bool>& selected) {
  std::vector<std::vector<Index>> out;
  std::vector<bool> seen(selected.size(), false);
  const Index px = grid.points_x();
  for (Index start : grid.interior()) {
    if (!selected[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
    std::vector<Index> comp, stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
      const Index n = stack.back();
      stack.pop_back();
      comp.push_back(n);
      Index nbrs[4] = {n - 1, n + 1, n - px, n + px};
      const int count = grid.dim() == 2 ? 4 : 2;
      for (int q = 0; q < count; ++q) {
        const Index m = nbrs[q];
        if (m < 0 || m >= grid.slice_size() || grid.on_lateral(m)) continue;
        const auto um = static_cast<std::size_t>(m);
        if (selected[um] && !seen[um]) {
          seen[um] = true;
          stack.push_back(m);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

/// Block Poisson modification on one slab that respects the obstacle.
///
/// The free equation is solved on Q \ A with psi imposed on a trial contact
/// set A. A gains the nodes where the solution dips below psi and loses the
/// nodes where psi fails the supersolution inequality. The candidate
/// (solution on Q \ A, psi on A) replaces the current values only if it is a
/// discrete supersolution on all of Q; it is then automatically below the
/// current field. Returns the largest decrease, or 0 if rejected.
template <typename Scalar>
Scalar supersolution_block_modify(const SpaceTimeGrid<Scalar>& grid, Field<Scalar>& cur,
                                  const std::vector<Index>& block, Index k, const Field<Scalar>& psi,
                                  const PmeParameters<Scalar>& p, Scalar accept_tol,
                                  int max_rounds = 50) {
  const Scalar dt = grid.dt();
  const Slice<Scalar> u_prev = cur.col(k - 1);
  std::vector<bool> in_contact(static_cast<std::size_t>(grid.slice_size()), false);
  Slice<Scalar> w = pow_slice(cur.col(k), p.m);
  const Scalar tol = p.newton_tol * data_scale(u_prev, w, p.m);
  bool settled = false;
  for (int round = 0; round < max_rounds && !settled; ++round) {
    std::vector<Index> free_nodes;
    for (Index n : block) {
      if (in_contact[static_cast<std::size_t>(n)]) w[n] = pow_m(psi(n, k), p.m);
      else free_nodes.push_back(n);
    }
    if (!free_nodes.empty()) {
      ImplicitSystem<Scalar> sys(grid, free_nodes, p.m, dt);
      newton_solve(sys, u_prev, w, p);
    }
    settled = true;
    const Slice<Scalar> lap = laplacian(grid, w);
    for (Index n : block) {
      const auto un = static_cast<std::size_t>(n);
      if (!in_contact[un] && pow_m(w[n], Scalar(1) / p.m) < psi(n, k) - accept_tol) {
        in_contact[un] = true;
        settled = false;
      } else if (in_contact[un] && psi(n, k) - u_prev[n] - dt * lap[n] < -tol) {
        in_contact[un] = false;
        settled = false;
      }
    }
  }
  if (!settled) return Scalar(0);

  Scalar dec(0);
  for (Index n : block) {
    const Scalar cand = in_contact[static_cast<std::size_t>(n)] ? psi(n, k)
                                                                 : std::max(pow_m(w[n], Scalar(1) / p.m), psi(n, k));
    const Scalar next = std::min(cur(n, k), cand);
    dec = std::max(dec, cur(n, k) - next);
    cur(n, k) = next;
  }
  return dec;
}

}  // namespace detail

/// Poisson modification of `state.current` inside `cyl`: solve the free
/// equation in the cylinder with the current values as parabolic boundary
/// data, then replace according to `rule`.
template <typename Scalar>
BalayageState<Scalar> poisson_modify(const SpaceTimeGrid<Scalar>& grid, const BalayageState<Scalar>& state,
                                     const Cylinder& cyl, const Obstacle<Scalar>& obs,
                                     const PmeParameters<Scalar>& p, ModifyRule rule = ModifyRule::Project) {
  p.validate();
  detail::require_field(grid, state.current, "poisson_modify");
  detail::require_field(grid, obs.psi, "poisson_modify");
  if (cyl.k_begin < 0 || cyl.k_end > grid.nt() || cyl.k_end <= cyl.k_begin)
    throw std::invalid_argument("poisson_modify: cylinder time range outside the grid");
  for (Index n : cyl.nodes)
    if (n < 0 || n >= grid.slice_size() || grid.on_lateral(n))
      throw std::invalid_argument("poisson_modify: cylinder nodes must be interior nodes");
  BalayageState<Scalar> next = state;
  next.decrease_norm = detail::modify_in_place(grid, next.current, cyl, obs.psi, p, rule,
                                               contact_tolerance(obs));
  return next;
}

template <typename Scalar>
struct BalayageOptions {
  Scalar sweep_tol = Scalar(-1);  // <= 0 selects 1e-9 sup psi
  Index max_sweeps = 500;
  /// 0 keeps storage order; any other value shuffles node and block order
  /// with this seed.
  std::uint64_t ordering_seed = 0;
  /// Solve whole non-contact components of a slice as one cylinder.
  bool block_modifications = true;
};

template <typename Scalar>
struct BalayageSolution {
  Field<Scalar> u;
  SolveReport report;
};

/// Minimal supersolution above psi by monotone Poisson modifications,
/// starting from the constant sup psi.
///
/// Each sweep visits the one-step slabs Omega x (t_{k-1}, t_k] in time order.
/// Inside a slab every interior node is a cylinder of its own (exact scalar
/// solve, then max with psi); afterwards each connected component of the
/// slab's non-contact set is replaced by a block candidate (see
/// supersolution_block_modify) when that candidate is a verified
/// supersolution. Every iterate stays a discrete supersolution above psi and
/// decreases nodewise.
template <typename Scalar>
BalayageSolution<Scalar> balayage_solve(const SpaceTimeGrid<Scalar>& grid, const Obstacle<Scalar>& obs,
                                        const PmeParameters<Scalar>& p,
                                        const BalayageOptions<Scalar>& opt = {}) {
  p.validate();
  validate_obstacle(grid, obs);
  const auto start = std::chrono::steady_clock::now();
  const Scalar sup_psi = obs.sup();
  const Scalar sweep_tol = opt.sweep_tol > Scalar(0) ? opt.sweep_tol : Scalar(1e-9) * sup_psi;
  const Scalar ctol = contact_tolerance(obs);

  BalayageState<Scalar> state;
  state.current = Field<Scalar>::Constant(grid.slice_size(), grid.time_points(), sup_psi);
  state.current.col(0) = obs.psi.col(0);
  for (Index k = 1; k <= grid.nt(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n)
      if (grid.on_lateral(n)) state.current(n, k) = obs.psi(n, k);
  for (Index k = 1; k <= grid.nt(); ++k) state.sweep_cylinders.push_back({k - 1, k, grid.interior()});

  BalayageSolution<Scalar> sol;
  std::mt19937_64 rng(opt.ordering_seed);
  std::vector<Index> order = grid.interior();
  Cylinder point{0, 1, {0}};
  while (true) {
    if (state.iteration >= opt.max_sweeps)
      throw SolverError(SolverError::Kind::NoConvergence,
                        "balayage_solve: no convergence after " + std::to_string(opt.max_sweeps) +
                            " sweeps");
    Scalar sweep_dec(0);
    for (const Cylinder& slab : state.sweep_cylinders) {
      const Index k = slab.k_end;
      if (opt.ordering_seed != 0) std::shuffle(order.begin(), order.end(), rng);
      point.k_begin = k - 1;
      point.k_end = k;
      for (Index n : order) {
        point.nodes[0] = n;
        sweep_dec = std::max(sweep_dec, detail::modify_in_place(grid, state.current, point, obs.psi, p,
                                                                ModifyRule::Project, ctol));
      }
      if (!opt.block_modifications) continue;
      std::vector<bool> free_nodes(static_cast<std::size_t>(grid.slice_size()), false);
      for (Index n : grid.interior())
        free_nodes[static_cast<std::size_t>(n)] = state.current(n, k) > obs.psi(n, k) + ctol;
      auto blocks = detail::components(grid, free_nodes);
      if (opt.ordering_seed != 0) std::shuffle(blocks.begin(), blocks.end(), rng);
      for (const auto& block : blocks) {
        try {
          sweep_dec = std::max(sweep_dec, detail::supersolution_block_modify(grid, state.current, block, k,
                                                                             obs.psi, p, ctol));
        } catch (const SolverError& e) {
          throw e.at_step(static_cast<long>(k));
        }
      }
    }
    ++state.iteration;
    state.decrease_norm = sweep_dec;
    sol.report.sweep_decrements.push_back(static_cast<double>(sweep_dec));
    if (sweep_dec <= sweep_tol) break;
  }

  sol.u = std::move(state.current);
  sol.report.steps = grid.nt();
  sol.report.sweeps = state.iteration;
  sol.report.max_residual = sol.report.sweep_decrements.back();
  Index contact = 0;
  for (Index k = 0; k <= grid.nt(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n)
      if (sol.u(n, k) - obs.psi(n, k) <= ctol) ++contact;
  sol.report.contact_nodes = contact;
  sol.report.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

/// Zero for t_k <= t_{k0}, v afterwards.
template <typename Scalar>
Field<Scalar> zero_past_extend(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& v, Index k0) {
  detail::require_field(grid, v, "zero_past_extend");
  if (!all_finite_nonnegative(v)) throw std::invalid_argument("zero_past_extend: v must be >= 0");
  Field<Scalar> out = v;
  for (Index k = 0; k <= std::min(k0, grid.nt()); ++k) out.col(k).setZero();
  return out;
}

}  // namespace pmeobs
