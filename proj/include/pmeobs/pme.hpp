#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "pmeobs/grid.hpp"
#include "pmeobs/report.hpp"

namespace pmeobs {

/// Parameters of the fast-diffusion equation u_t = Lap(u^m) and its solver.
template <typename Scalar>
struct PmeParameters {
  Scalar m = Scalar(0.5);
  Scalar newton_tol = Scalar(1e-10);  // on max|F|, relative to the data scale
  int newton_max_iter = 50;
  Scalar w_floor = Scalar(1e-14);  // lower bound for w inside the Jacobian only

  void validate() const {
    if (!(m > Scalar(0) && m < Scalar(1)))
      throw std::invalid_argument("pme: exponent m must lie in (0,1)");
    if (!(newton_tol > Scalar(0))) throw std::invalid_argument("pme: newton_tol must be positive");
    if (newton_max_iter < 1) throw std::invalid_argument("pme: newton_max_iter must be >= 1");
    if (!(w_floor > Scalar(0))) throw std::invalid_argument("pme: w_floor must be positive");
  }
};

/// Dirichlet data on the parabolic boundary: the t = 0 slice and the
/// lateral nodes of every slice. Other entries are ignored.
template <typename Scalar>
struct BoundaryData {
  Field<Scalar> values;

  static BoundaryData zero(const SpaceTimeGrid<Scalar>& grid) { return {grid.zero_field()}; }

  template <typename F>
  static BoundaryData sample(const SpaceTimeGrid<Scalar>& grid, F&& g) {
    return {grid.sample_field(std::forward<F>(g))};
  }
};

namespace detail {

template <typename Scalar>
Scalar pow_m(Scalar w, Scalar e) {
  return w > Scalar(0) ? std::pow(w, e) : Scalar(0);
}

/// F(w) = w^{1/m} - u_prev - dt Lap(w) restricted to a set of unknown nodes;
/// every other node of the slice keeps the value stored in w.
template <typename Scalar>
class ImplicitSystem {
public:
  ImplicitSystem(const SpaceTimeGrid<Scalar>& grid, std::vector<Index> unknowns, Scalar m,
                 Scalar dt)
      : unknowns_(std::move(unknowns)), m_(m), dt_(dt) {
    L_rows_ = laplacian_rows(grid, unknowns_);
    std::vector<Index> pos(static_cast<std::size_t>(grid.slice_size()), -1);
    for (std::size_t r = 0; r < unknowns_.size(); ++r)
      pos[static_cast<std::size_t>(unknowns_[r])] = static_cast<Index>(r);
    std::vector<Eigen::Triplet<Scalar>> trips;
    for (Index c = 0; c < L_rows_.outerSize(); ++c)
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(L_rows_, c); it; ++it)
        if (pos[static_cast<std::size_t>(it.col())] >= 0)
          trips.emplace_back(it.row(), pos[static_cast<std::size_t>(it.col())], it.value());
    const Index n = static_cast<Index>(unknowns_.size());
    L_uu_.resize(n, n);
    L_uu_.setFromTriplets(trips.begin(), trips.end());
  }

  const std::vector<Index>& unknowns() const { return unknowns_; }
  Index size() const { return static_cast<Index>(unknowns_.size()); }

  Slice<Scalar> residual(const Slice<Scalar>& w, const Slice<Scalar>& u_prev) const {
    Slice<Scalar> F = -dt_ * (L_rows_ * w);
    const Scalar e = Scalar(1) / m_;
    for (Index r = 0; r < size(); ++r) {
      const Index n = unknowns_[static_cast<std::size_t>(r)];
      F[r] += pow_m(w[n], e) - u_prev[n];
    }
    return F;
  }

  Eigen::SparseMatrix<Scalar> jacobian(const Slice<Scalar>& w, Scalar w_floor) const {
    Eigen::SparseMatrix<Scalar> J = -dt_ * L_uu_;
    const Scalar e = Scalar(1) / m_ - Scalar(1);
    for (Index r = 0; r < size(); ++r) {
      const Scalar wn = std::max(w[unknowns_[static_cast<std::size_t>(r)]], w_floor);
      J.coeffRef(r, r) += std::pow(wn, e) / m_;
    }
    return J;
  }

  Scalar m() const { return m_; }
  Scalar dt() const { return dt_; }

private:
  std::vector<Index> unknowns_;
  Eigen::SparseMatrix<Scalar> L_rows_, L_uu_;
  Scalar m_, dt_;
};

template <typename Scalar>
struct NewtonOutcome {
  int iterations = 0;
  Scalar residual = Scalar(0);
};

template <typename Scalar>
Scalar data_scale(const Slice<Scalar>& u_prev, const Slice<Scalar>& w, Scalar m) {
  const Scalar wmax = w.size() ? w.cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar umax = u_prev.size() ? u_prev.cwiseAbs().maxCoeff() : Scalar(0);
  return std::max({Scalar(1), umax, pow_m(wmax, Scalar(1) / m)});
}

/// Damped Newton on the unknowns of `sys`; `w` holds the fixed values on
/// entry and the solution on exit. Iterates are projected onto w >= 0.
template <typename Scalar>
NewtonOutcome<Scalar> newton_solve(const ImplicitSystem<Scalar>& sys, const Slice<Scalar>& u_prev,
                                   Slice<Scalar>& w, const PmeParameters<Scalar>& p) {
  NewtonOutcome<Scalar> out;
  if (sys.size() == 0) return out;
  const Scalar tol = p.newton_tol * data_scale(u_prev, w, sys.m());
  Slice<Scalar> F = sys.residual(w, u_prev);
  Scalar fmax = F.cwiseAbs().maxCoeff();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt;
  bool analyzed = false;
  Slice<Scalar> trial(w.size());
  while (fmax > tol) {
    if (out.iterations >= p.newton_max_iter)
      throw SolverError(SolverError::Kind::NewtonDiverged,
                        "Newton iteration did not reach tolerance (residual " +
                            std::to_string(static_cast<double>(fmax)) + ")");
    const auto J = sys.jacobian(w, p.w_floor);
    if (!analyzed) {
      ldlt.analyzePattern(J);
      analyzed = true;
    }
    ldlt.factorize(J);
    if (ldlt.info() != Eigen::Success)
      throw SolverError(SolverError::Kind::NewtonDiverged, "Newton: singular Jacobian");
    const Slice<Scalar> d = ldlt.solve(-F);
    const Scalar f2 = F.squaredNorm();
    Scalar lambda(1);
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, lambda /= Scalar(2)) {
      trial = w;
      for (Index r = 0; r < sys.size(); ++r) {
        const Index n = sys.unknowns()[static_cast<std::size_t>(r)];
        trial[n] = std::max(Scalar(0), w[n] + lambda * d[r]);
      }
      const Slice<Scalar> Ft = sys.residual(trial, u_prev);
      if (Ft.squaredNorm() < f2 || Ft.cwiseAbs().maxCoeff() <= tol) {
        w.swap(trial);
        F = Ft;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted)
      throw SolverError(SolverError::Kind::NewtonDiverged,
                        "Newton line search failed to decrease the residual");
    fmax = F.cwiseAbs().maxCoeff();
  }
  out.residual = fmax;
  return out;
}

template <typename Scalar, typename Derived>
Slice<Scalar> pow_slice(const Eigen::MatrixBase<Derived>& u, Scalar e) {
  Slice<Scalar> w(u.size());
  for (Index n = 0; n < u.size(); ++n) w[n] = pow_m<Scalar>(u[n], e);
  return w;
}

}  // namespace detail

template <typename Scalar>
struct StepResult {
  Slice<Scalar> u;
  int iterations = 0;
  Scalar residual = Scalar(0);
};

/// One implicit Euler step of u_t = Lap(u^m) with lateral values `bdry`.
///
/// Solved for w = u^m by damped Newton on F(w) = w^{1/m} - u_prev - dt Lap(w),
/// Jacobian diag(w^{(1-m)/m}/m) - dt L. Boundary entries of the result equal
/// `bdry` exactly.
template <typename Scalar>
StepResult<Scalar> pme_step(const SpaceTimeGrid<Scalar>& grid, const Slice<Scalar>& u_prev,
                            const Slice<Scalar>& bdry, const PmeParameters<Scalar>& p, Scalar dt) {
  p.validate();
  detail::require_slice(grid, u_prev, "pme_step");
  detail::require_slice(grid, bdry, "pme_step");
  if (!all_finite_nonnegative(u_prev) || !all_finite_nonnegative(bdry))
    throw std::invalid_argument("pme_step: data must be finite and nonnegative");

  detail::ImplicitSystem<Scalar> sys(grid, grid.interior(), p.m, dt);
  Slice<Scalar> w = detail::pow_slice(bdry, p.m);
  for (Index n : grid.interior()) w[n] = detail::pow_m(u_prev[n], p.m);
  const auto outcome = detail::newton_solve(sys, u_prev, w, p);

  StepResult<Scalar> r;
  r.u = bdry;
  for (Index n : grid.interior()) r.u[n] = detail::pow_m(w[n], Scalar(1) / p.m);
  if (!all_finite_nonnegative(r.u))
    throw SolverError(SolverError::Kind::NegativeValue, "pme_step: non-finite or negative value");
  r.iterations = outcome.iterations;
  r.residual = outcome.residual;
  return r;
}

template <typename Scalar>
struct PmeSolution {
  Field<Scalar> u;
  SolveReport report;
};

/// Repeated pme_step from the t = 0 slice of `bdry`.
template <typename Scalar>
PmeSolution<Scalar> pme_solve(const SpaceTimeGrid<Scalar>& grid, const BoundaryData<Scalar>& bdry,
                              const PmeParameters<Scalar>& p) {
  detail::require_field(grid, bdry.values, "pme_solve");
  const auto start = std::chrono::steady_clock::now();
  PmeSolution<Scalar> sol;
  sol.u = grid.zero_field();
  sol.u.col(0) = bdry.values.col(0);
  for (Index k = 1; k <= grid.nt(); ++k) {
    Slice<Scalar> lateral = grid.zero_slice();
    for (Index n = 0; n < grid.slice_size(); ++n)
      if (grid.on_lateral(n)) lateral[n] = bdry.values(n, k);
    try {
      const auto step = pme_step<Scalar>(grid, sol.u.col(k - 1), lateral, p, grid.dt());
      sol.u.col(k) = step.u;
      sol.report.newton_iters.push_back(step.iterations);
      sol.report.max_residual =
          std::max(sol.report.max_residual, static_cast<double>(step.residual));
    } catch (const SolverError& e) {
      throw e.at_step(static_cast<long>(k));
    }
  }
  sol.report.steps = grid.nt();
  sol.report.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

/// Self-similar source solution of the fast-diffusion equation in R^n,
///   U(x,t) = t^{-alpha} (C + k |x|^2 t^{-2 alpha/n})^{-1/(1-m)},
/// alpha = n/(n(m-1)+2), k = alpha(1-m)/(2mn), C fixed by the total mass.
template <typename Scalar>
class Barenblatt {
public:
  Barenblatt(Scalar m, int n, Scalar mass) : m_(m), n_(n), mass_(mass) {
    if (n != 1 && n != 2) throw std::invalid_argument("barenblatt: dimension must be 1 or 2");
    if (!(m > Scalar(n - 2) / Scalar(n) && m < Scalar(1)))
      throw std::invalid_argument("barenblatt: m must lie in ((n-2)/n, 1)");
    if (!(mass > Scalar(0))) throw std::invalid_argument("barenblatt: mass must be positive");
    alpha_ = Scalar(n) / (Scalar(n) * (m - Scalar(1)) + Scalar(2));
    k_ = alpha_ * (Scalar(1) - m) / (Scalar(2) * m * Scalar(n));
    const Scalar p = Scalar(1) / (Scalar(1) - m);
    // mass(C) = int_{R^n} (C + k|xi|^2)^{-p} dxi
    if (n == 1) {
      const Scalar shape = std::sqrt(std::numbers::pi_v<Scalar>) *
                           std::exp(std::lgamma(p - Scalar(0.5)) - std::lgamma(p)) /
                           std::sqrt(k_);
      C_ = std::pow(mass / shape, Scalar(1) / (Scalar(0.5) - p));
    } else {
      const Scalar shape = std::numbers::pi_v<Scalar> / (k_ * (p - Scalar(1)));
      C_ = std::pow(mass / shape, Scalar(1) / (Scalar(1) - p));
    }
  }

  Scalar operator()(Scalar r2, Scalar t) const {
    if (!(t > Scalar(0))) throw std::invalid_argument("barenblatt: t must be positive");
    const Scalar base = C_ + k_ * r2 * std::pow(t, Scalar(-2) * alpha_ / Scalar(n_));
    return std::pow(t, -alpha_) * std::pow(base, Scalar(-1) / (Scalar(1) - m_));
  }

  Scalar alpha() const { return alpha_; }
  Scalar k() const { return k_; }
  Scalar C() const { return C_; }
  Scalar mass() const { return mass_; }
  int dim() const { return n_; }

private:
  Scalar m_;
  int n_;
  Scalar mass_, alpha_{}, k_{}, C_{};
};

template <typename Scalar>
Scalar barenblatt(std::span<const Scalar> x, Scalar t, Scalar m, Scalar mass) {
  Scalar r2(0);
  for (Scalar xi : x) r2 += xi * xi;
  return Barenblatt<Scalar>(m, static_cast<int>(x.size()), mass)(r2, t);
}

enum class WeakForm {
  /// Summation by parts matched to the implicit Euler stencil: for a grid
  /// function it equals sum_k sum_i vol_i F_i^k phi_i^k exactly, with
  /// F^k = u^k - u^{k-1} - dt Lap(w^k).
  Scheme,
  /// Trapezoidal rule in time with centered differences of phi.
  Trapezoidal,
};

/// Discrete  int int (-u phi_t + grad u^m . grad phi) dx dt  for a test field
/// phi vanishing on the parabolic boundary and the top slice.
template <typename Scalar>
Scalar weak_residual(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& u,
                     const Field<Scalar>& phi, Scalar m, WeakForm form = WeakForm::Scheme) {
  detail::require_field(grid, u, "weak_residual");
  detail::require_field(grid, phi, "weak_residual");
  const Index nt = grid.nt();
  const Scalar dt = grid.dt();
  auto mass_pair = [&](const auto& a, const auto& b) {
    Scalar s(0);
    for (Index n : grid.interior()) s += grid.node_volume(n) * a[n] * b[n];
    return s;
  };
  Scalar total(0);
  if (form == WeakForm::Scheme) {
    for (Index k = 0; k < nt; ++k) {
      const Slice<Scalar> dphi = phi.col(k + 1) - phi.col(k);
      const Slice<Scalar> w = detail::pow_slice(u.col(k + 1), m);
      total += -mass_pair(u.col(k), dphi) + dt * dirichlet_form(grid, w, phi.col(k + 1));
    }
  } else {
    for (Index k = 0; k <= nt; ++k) {
      Slice<Scalar> dphi;
      if (k == 0) dphi = (phi.col(1) - phi.col(0)) / dt;
      else if (k == nt) dphi = (phi.col(nt) - phi.col(nt - 1)) / dt;
      else dphi = (phi.col(k + 1) - phi.col(k - 1)) / (Scalar(2) * dt);
      const Slice<Scalar> w = detail::pow_slice(u.col(k), m);
      const Scalar weight = (k == 0 || k == nt) ? dt / Scalar(2) : dt;
      total += weight * (-mass_pair(u.col(k), dphi) + dirichlet_form(grid, w, phi.col(k)));
    }
  }
  return total;
}

/// Strong-form residual  (u^k - u^{k-1})/dt - Lap((u^k)^m)  on interior nodes,
/// k >= 1; column 0 and boundary rows are zero.
template <typename Scalar>
Field<Scalar> scheme_residual(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& u, Scalar m) {
  detail::require_field(grid, u, "scheme_residual");
  Field<Scalar> r = grid.zero_field();
  for (Index k = 1; k <= grid.nt(); ++k) {
    const Slice<Scalar> lap = laplacian(grid, detail::pow_slice(u.col(k), m));
    for (Index n : grid.interior()) r(n, k) = (u(n, k) - u(n, k - 1)) / grid.dt() - lap[n];
  }
  return r;
}

}  // namespace pmeobs
