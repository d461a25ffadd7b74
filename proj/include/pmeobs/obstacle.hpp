#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseLU>

#include "pmeobs/grid.hpp"
#include "pmeobs/pme.hpp"
#include "pmeobs/report.hpp"

namespace pmeobs {

/// Obstacle psi on the full space-time grid. Lateral entries are its trace.
template <typename Scalar>
struct Obstacle {
  Field<Scalar> psi;
  bool compact_support = false;
  Scalar holder_exponent = Scalar(1);

  Slice<Scalar> initial() const { return psi.col(0); }
  Scalar sup() const { return psi.size() ? psi.maxCoeff() : Scalar(0); }
};

/// Contact threshold 1e-9 (1 + sup psi).
template <typename Scalar>
Scalar contact_tolerance(const Obstacle<Scalar>& obs) {
  return Scalar(1e-9) * (Scalar(1) + obs.sup());
}

/// Discrete parabolic Hoelder seminorm: neighbour differences divided by
/// |dx|^beta in space and dt^{beta/2} in time.
template <typename Scalar>
Scalar holder_seminorm(const SpaceTimeGrid<Scalar>& grid, const Obstacle<Scalar>& obs) {
  const Scalar beta = obs.holder_exponent;
  const Scalar sx = std::pow(grid.dx(), beta);
  const Scalar sy = std::pow(grid.dy(), beta);
  const Scalar st = std::pow(grid.dt(), beta / Scalar(2));
  const Index px = grid.points_x();
  Scalar worst(0);
  for (Index k = 0; k < grid.time_points(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n) {
      const Scalar v = obs.psi(n, k);
      if (grid.ix(n) + 1 < px) worst = std::max(worst, std::abs(obs.psi(n + 1, k) - v) / sx);
      if (grid.dim() == 2 && grid.iy(n) + 1 < grid.points_y())
        worst = std::max(worst, std::abs(obs.psi(n + px, k) - v) / sy);
      if (k + 1 < grid.time_points()) worst = std::max(worst, std::abs(obs.psi(n, k + 1) - v) / st);
    }
  return worst;
}

template <typename Scalar>
void validate_obstacle(const SpaceTimeGrid<Scalar>& grid, const Obstacle<Scalar>& obs) {
  detail::require_field(grid, obs.psi, "obstacle");
  if (!all_finite_nonnegative(obs.psi))
    throw std::invalid_argument("obstacle: psi must be finite and nonnegative");
  if (!(obs.holder_exponent > Scalar(0) && obs.holder_exponent <= Scalar(1)))
    throw std::invalid_argument("obstacle: Hoelder exponent must lie in (0,1]");
  if (!std::isfinite(static_cast<double>(holder_seminorm(grid, obs))))
    throw std::invalid_argument("obstacle: Hoelder seminorm is not finite");
  if (obs.compact_support) {
    for (Index k = 0; k < grid.time_points(); ++k)
      for (Index n = 0; n < grid.slice_size(); ++n) {
        const bool edge = grid.on_lateral(n) || k == 0 || k == grid.nt();
        if (edge && obs.psi(n, k) != Scalar(0))
          throw std::invalid_argument(
              "obstacle: declared compact support but psi is nonzero on the lateral boundary "
              "or on the first/last slice");
      }
  }
}

namespace detail {

/// Unique root s >= 0 of s^{1/m} + a s = c for a > 0, c >= 0.
template <typename Scalar>
Scalar point_solve(Scalar a, Scalar c, Scalar m) {
  if (c <= Scalar(0)) return Scalar(0);
  if (m == Scalar(0.5)) return Scalar(2) * c / (a + std::sqrt(a * a + Scalar(4) * c));
  const Scalar e = Scalar(1) / m;
  // g is convex and increasing; Newton from a point with g >= 0 decreases
  // monotonically to the root.
  Scalar s = std::min(c / a, std::pow(c, m));
  for (int it = 0; it < 100; ++it) {
    const Scalar g = std::pow(s, e) + a * s - c;
    const Scalar dg = e * std::pow(s, e - Scalar(1)) + a;
    const Scalar step = g / dg;
    const Scalar next = std::max(Scalar(0), s - step);
    if (!(next < s) || s - next <= std::numeric_limits<Scalar>::epsilon() * s) {
      s = std::min(s, next);
      break;
    }
    s = next;
  }
  return s;
}

/// Coefficients of the single-node implicit equation at node n:
/// w^{1/m} + a w = c, all neighbours of n frozen at w.
template <typename Scalar>
std::pair<Scalar, Scalar> point_coefficients(const SpaceTimeGrid<Scalar>& grid, const Slice<Scalar>& w,
                                             Index n, Scalar u_prev, Scalar dt) {
  const Scalar cx = dt / (grid.dx() * grid.dx());
  Scalar a = Scalar(2) * cx;
  Scalar c = u_prev + cx * (w[n - 1] + w[n + 1]);
  if (grid.dim() == 2) {
    const Scalar cy = dt / (grid.dy() * grid.dy());
    const Index px = grid.points_x();
    a += Scalar(2) * cy;
    c += cy * (w[n - px] + w[n + px]);
  }
  return {a, c};
}

}  // namespace detail

template <typename Scalar>
struct ViStepResult {
  Slice<Scalar> u;
  Eigen::Array<bool, Eigen::Dynamic, 1> contact;
  int iterations = 0;
  Scalar complementarity = Scalar(0);  // max |min(w - psi^m, F(w))|
};

/// One implicit step of the obstacle problem: find w = u^m with
///   w >= psi^m,  F(w) >= 0,  (w - psi^m) F(w) = 0,
/// F(w) = w^{1/m} - u_prev - dt Lap(w), lateral values from `bdry`.
///
/// Semismooth Newton on min(w - psi^m, F(w)) with a merit line search; when
/// the line search stalls, a few projected Gauss-Seidel sweeps are run before
/// Newton resumes.
template <typename Scalar>
ViStepResult<Scalar> vi_step(const SpaceTimeGrid<Scalar>& grid, const Slice<Scalar>& u_prev,
                             const Slice<Scalar>& psi, const Slice<Scalar>& bdry,
                             const PmeParameters<Scalar>& p, Scalar dt) {
  p.validate();
  detail::require_slice(grid, u_prev, "vi_step");
  detail::require_slice(grid, psi, "vi_step");
  detail::require_slice(grid, bdry, "vi_step");
  if (!all_finite_nonnegative(u_prev) || !all_finite_nonnegative(psi) || !all_finite_nonnegative(bdry))
    throw std::invalid_argument("vi_step: data must be finite and nonnegative");
  const Scalar sup_psi = psi.maxCoeff();
  const Scalar ctol = Scalar(1e-9) * (Scalar(1) + sup_psi);
  for (Index n = 0; n < grid.slice_size(); ++n)
    if (grid.on_lateral(n) && psi[n] > bdry[n] + ctol)
      throw SolverError(SolverError::Kind::InfeasibleObstacle,
                        "vi_step: obstacle exceeds the lateral boundary data");

  const auto& interior = grid.interior();
  const Index N = static_cast<Index>(interior.size());
  detail::ImplicitSystem<Scalar> sys(grid, interior, p.m, dt);
  Slice<Scalar> g(N);
  Slice<Scalar> w = detail::pow_slice(bdry, p.m);
  for (Index r = 0; r < N; ++r) {
    const Index n = interior[static_cast<std::size_t>(r)];
    g[r] = detail::pow_m(psi[n], p.m);
    w[n] = std::max(detail::pow_m(u_prev[n], p.m), g[r]);
  }
  const Scalar tol = p.newton_tol * detail::data_scale(u_prev, w, p.m);

  auto merit = [&](const Slice<Scalar>& wv, Slice<Scalar>& F, Slice<Scalar>& phi) {
    F = sys.residual(wv, u_prev);
    phi.resize(N);
    for (Index r = 0; r < N; ++r)
      phi[r] = std::min(wv[interior[static_cast<std::size_t>(r)]] - g[r], F[r]);
  };
  auto pgs_sweeps = [&](int count) {
    for (int s = 0; s < count; ++s)
      for (Index r = 0; r < N; ++r) {
        const Index n = interior[static_cast<std::size_t>(r)];
        const auto [a, c] = detail::point_coefficients(grid, w, n, u_prev[n], dt);
        w[n] = std::max(detail::point_solve(a, c, p.m), g[r]);
      }
  };

  Slice<Scalar> F, phi, Ft, phit, trial;
  merit(w, F, phi);
  const int max_iter = 4 * p.newton_max_iter;
  int iter = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
  while (phi.cwiseAbs().maxCoeff() > tol) {
    if (iter >= max_iter)
      throw SolverError(SolverError::Kind::SolverDiverged,
                        "vi_step: complementarity residual above tolerance after " +
                            std::to_string(max_iter) + " iterations");
    ++iter;
    Eigen::SparseMatrix<Scalar> M = sys.jacobian(w, p.w_floor);
    Slice<Scalar> rhs(N);
    std::vector<bool> active(static_cast<std::size_t>(N));
    for (Index r = 0; r < N; ++r) {
      const Index n = interior[static_cast<std::size_t>(r)];
      active[static_cast<std::size_t>(r)] = w[n] - g[r] <= F[r];
      rhs[r] = active[static_cast<std::size_t>(r)] ? g[r] - w[n] : -F[r];
    }
    for (Index c = 0; c < M.outerSize(); ++c)
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(M, c); it; ++it)
        if (active[static_cast<std::size_t>(it.row())]) it.valueRef() = it.row() == it.col() ? Scalar(1) : Scalar(0);
    M.prune(Scalar(0));
    M.makeCompressed();
    lu.compute(M);
    if (lu.info() != Eigen::Success) {
      pgs_sweeps(20);
      merit(w, F, phi);
      continue;
    }
    const Slice<Scalar> d = lu.solve(rhs);
    const Scalar m0 = phi.squaredNorm();
    bool accepted = false;
    Scalar lambda(1);
    for (int halving = 0; halving <= 30; ++halving, lambda /= Scalar(2)) {
      trial = w;
      for (Index r = 0; r < N; ++r) {
        const Index n = interior[static_cast<std::size_t>(r)];
        trial[n] = std::max(Scalar(0), w[n] + lambda * d[r]);
      }
      merit(trial, Ft, phit);
      if (phit.squaredNorm() < m0 || phit.cwiseAbs().maxCoeff() <= tol) {
        w.swap(trial);
        F.swap(Ft);
        phi.swap(phit);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      pgs_sweeps(20);
      merit(w, F, phi);
    }
  }

  ViStepResult<Scalar> out;
  out.u = bdry;
  out.contact = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(grid.slice_size(), false);
  for (Index r = 0; r < N; ++r) {
    const Index n = interior[static_cast<std::size_t>(r)];
    out.u[n] = std::max(detail::pow_m(w[n], Scalar(1) / p.m), psi[n]);
    out.contact[n] = out.u[n] - psi[n] <= ctol;
  }
  for (Index n = 0; n < grid.slice_size(); ++n)
    if (grid.on_lateral(n)) out.contact[n] = out.u[n] - psi[n] <= ctol;
  if (!all_finite_nonnegative(out.u))
    throw SolverError(SolverError::Kind::NegativeValue, "vi_step: non-finite or negative value");
  out.iterations = iter;
  out.complementarity = phi.size() ? phi.cwiseAbs().maxCoeff() : Scalar(0);
  return out;
}

template <typename Scalar>
struct ViSolution {
  Field<Scalar> u;
  Mask contact;
  SolveReport report;
};

/// Obstacle problem with u = psi on the parabolic boundary, by repeated vi_step.
template <typename Scalar>
ViSolution<Scalar> vi_solve(const SpaceTimeGrid<Scalar>& grid, const Obstacle<Scalar>& obs,
                            const PmeParameters<Scalar>& p) {
  validate_obstacle(grid, obs);
  const auto start = std::chrono::steady_clock::now();
  ViSolution<Scalar> sol;
  sol.u = grid.zero_field();
  sol.contact = Mask::Constant(grid.slice_size(), grid.time_points(), false);
  sol.u.col(0) = obs.psi.col(0);
  const Scalar ctol = contact_tolerance(obs);
  for (Index n = 0; n < grid.slice_size(); ++n) sol.contact(n, 0) = true;
  for (Index k = 1; k <= grid.nt(); ++k) {
    const Slice<Scalar> psi_k = obs.psi.col(k);
    try {
      const auto step = vi_step<Scalar>(grid, sol.u.col(k - 1), psi_k, psi_k, p, grid.dt());
      sol.u.col(k) = step.u;
      for (Index n = 0; n < grid.slice_size(); ++n) sol.contact(n, k) = step.u[n] - psi_k[n] <= ctol;
      sol.report.newton_iters.push_back(step.iterations);
      sol.report.complementarity_residual =
          std::max(sol.report.complementarity_residual, static_cast<double>(step.complementarity));
    } catch (const SolverError& e) {
      throw e.at_step(static_cast<long>(k));
    }
  }
  sol.report.steps = grid.nt();
  sol.report.max_residual = sol.report.complementarity_residual;
  sol.report.contact_nodes = sol.contact.count();
  sol.report.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

/// I(a,b) = a^{m+1}/(m+1) + m b^{m+1}/(m+1) - b^m a, nonnegative by convexity.
template <typename Scalar>
Scalar boiler_I(Scalar a, Scalar b, Scalar m) {
  if (a < Scalar(0) || b < Scalar(0)) throw std::invalid_argument("boiler_I: arguments must be >= 0");
  const Scalar bm = detail::pow_m(b, m);
  return (detail::pow_m(a, m + Scalar(1)) + m * b * bm) / (m + Scalar(1)) - bm * a;
}

namespace detail {

template <typename Scalar>
void require_admissible(const SpaceTimeGrid<Scalar>& grid, const Obstacle<Scalar>& obs,
                        const Field<Scalar>& v) {
  require_field(grid, v, "comparison map");
  if (!all_finite_nonnegative(v)) throw std::invalid_argument("comparison map must be finite and >= 0");
  const Scalar tol = contact_tolerance(obs);
  if (((v - obs.psi).array() < -tol).any())
    throw std::invalid_argument("inadmissible comparison map: v < psi somewhere");
}

}  // namespace detail

/// Local variational inequality for u against the comparison map v:
///   int int eta [alpha' (u^{m+1}/(m+1) - u v^m) - alpha u d_t v^m]
///     + int int alpha grad u^m . grad(eta (v^m - u^m)).
/// Time derivatives are interval differences, the other factors are
/// trapezoidal averages over each interval. Expected to be >= 0.
template <typename Scalar>
Scalar check_local_variational_inequality(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& u,
                                          const Obstacle<Scalar>& obs, const Field<Scalar>& v,
                                          const Slice<Scalar>& alpha, const Slice<Scalar>& eta,
                                          Scalar m) {
  detail::require_field(grid, u, "check_local_variational_inequality");
  detail::require_admissible(grid, obs, v);
  if (alpha.size() != grid.time_points())
    throw std::invalid_argument("check_local_variational_inequality: alpha needs one value per time node");
  detail::require_slice(grid, eta, "check_local_variational_inequality");
  const Scalar dt = grid.dt();
  const Scalar e1 = m + Scalar(1);

  auto slice_terms = [&](Index k, Scalar dalpha, const Slice<Scalar>& dvm) {
    // eta [alpha' (u^{m+1}/(m+1) - u v^m) - alpha u dvm] at node slice k
    Scalar s(0);
    for (Index n = 0; n < grid.slice_size(); ++n) {
      const Scalar uk = u(n, k);
      const Scalar vm = detail::pow_m(v(n, k), m);
      s += grid.node_volume(n) * eta[n] *
           (dalpha * (detail::pow_m(uk, e1) / e1 - uk * vm) - alpha[k] * uk * dvm[n]);
    }
    return s;
  };
  auto grad_term = [&](Index k) {
    const Slice<Scalar> wu = detail::pow_slice(u.col(k), m);
    const Slice<Scalar> wv = detail::pow_slice(v.col(k), m);
    const Slice<Scalar> test = eta.cwiseProduct(wv - wu);
    return alpha[k] * dirichlet_form(grid, wu, test);
  };

  Scalar total(0);
  for (Index k = 0; k < grid.nt(); ++k) {
    const Scalar dalpha = (alpha[k + 1] - alpha[k]) / dt;
    const Slice<Scalar> dvm =
        (detail::pow_slice(v.col(k + 1), m) - detail::pow_slice(v.col(k), m)) / dt;
    total += dt / Scalar(2) *
             (slice_terms(k, dalpha, dvm) + slice_terms(k + 1, dalpha, dvm) + grad_term(k) +
              grad_term(k + 1));
  }
  return total;
}

/// Energy form of the variational inequality up to time t_tau:
///   RHS - LHS with
///   LHS = 1/2 int_0^tau |grad u^m|^2,
///   RHS = int_0^tau d_t v^m (v - u) + 1/2 int_0^tau |grad v^m|^2
///         - int I(u(tau), v(tau)) + int I(psi_o, v(0)).
template <typename Scalar>
Scalar check_energy_variational_inequality(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& u,
                                           const Obstacle<Scalar>& obs, const Field<Scalar>& v,
                                           Index tau, Scalar m) {
  detail::require_field(grid, u, "check_energy_variational_inequality");
  detail::require_admissible(grid, obs, v);
  if (tau < 0 || tau > grid.nt()) throw std::invalid_argument("check_energy_variational_inequality: tau out of range");
  const Scalar dt = grid.dt();
  auto grad_sq = [&](const Field<Scalar>& f, Index k) {
    return h1_seminorm_sq(grid, detail::pow_slice(f.col(k), m));
  };
  Scalar lhs(0), rhs(0);
  for (Index k = 0; k < tau; ++k) {
    lhs += dt / Scalar(4) * (grad_sq(u, k) + grad_sq(u, k + 1));
    rhs += dt / Scalar(4) * (grad_sq(v, k) + grad_sq(v, k + 1));
    const Slice<Scalar> dvm = detail::pow_slice(v.col(k + 1), m) - detail::pow_slice(v.col(k), m);
    const Slice<Scalar> gap = (v.col(k) - u.col(k) + v.col(k + 1) - u.col(k + 1)) / Scalar(2);
    rhs += integrate(grid, dvm.cwiseProduct(gap));
  }
  Slice<Scalar> i_tau(grid.slice_size()), i_0(grid.slice_size());
  for (Index n = 0; n < grid.slice_size(); ++n) {
    i_tau[n] = boiler_I(u(n, tau), v(n, tau), m);
    i_0[n] = boiler_I(obs.psi(n, 0), v(n, 0), m);
  }
  rhs += integrate(grid, i_0) - integrate(grid, i_tau);
  return rhs - lhs;
}

}  // namespace pmeobs
