#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmeobs/grid.hpp"

namespace pmeobs {

/// Exponential time mollification
///   [[v]]_h(x,t) = e^{-t/h} v_o(x) + (1/h) int_0^t e^{(s-t)/h} v(x,s) ds.
template <typename Scalar>
struct MollifierParams {
  Scalar h;
  Slice<Scalar> initial;  // v_o
};

/// Evaluates [[v]]_h at every grid node.
///
/// v is reconstructed piecewise linearly in time, so the one-step recurrence
///   [[v]]^{k+1} = E [[v]]^k + w_old v^k + w_new v^{k+1}
/// with E = e^{-dt/h} is exact for that reconstruction. The result at t = 0
/// is exactly v_o.
template <typename Scalar>
Field<Scalar> mollify(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& v,
                      const MollifierParams<Scalar>& p) {
  detail::require_field(grid, v, "mollify");
  detail::require_slice(grid, p.initial, "mollify");
  if (!(p.h > Scalar(0))) throw std::invalid_argument("mollify: h must be positive");

  using std::exp;
  using std::expm1;
  const Scalar a = grid.dt() / p.h;
  const Scalar decay = exp(-a);
  const Scalar gain = -expm1(-a);  // 1 - e^{-a}, total kernel mass of one step
  // (1/h) int_0^dt e^{(s-dt)/h} (s/dt) ds = 1 - (1 - e^{-a})/a
  const Scalar w_new = Scalar(1) - gain / a;
  const Scalar w_old = gain - w_new;

  Field<Scalar> out(v.rows(), v.cols());
  out.col(0) = p.initial;
  for (Index k = 0; k < grid.nt(); ++k)
    out.col(k + 1) = decay * out.col(k) + w_old * v.col(k) + w_new * v.col(k + 1);
  return out;
}

/// max over interior time nodes of |D_t^c [[v]]_h - (v - [[v]]_h)/h|, divided
/// by sup|v|. D_t^c is the centered difference.
template <typename Scalar>
Scalar mollifier_identity_residual(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& v,
                                   const MollifierParams<Scalar>& p) {
  const Field<Scalar> mv = mollify(grid, v, p);
  Scalar worst(0);
  for (Index k = 1; k < grid.nt(); ++k) {
    const Slice<Scalar> dtm = (mv.col(k + 1) - mv.col(k - 1)) / (Scalar(2) * grid.dt());
    const Slice<Scalar> rhs = (v.col(k) - mv.col(k)) / p.h;
    worst = std::max<Scalar>(worst, (dtm - rhs).cwiseAbs().maxCoeff());
  }
  const Scalar scale = v.cwiseAbs().maxCoeff();
  return scale > Scalar(0) ? worst / scale : worst;
}

}  // namespace pmeobs
