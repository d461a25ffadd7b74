#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace pmeobs {

using Index = Eigen::Index;

/// Nodal values on one time slice, boundary nodes included.
template <typename Scalar>
using Slice = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Nodal values on the whole space-time grid. Column k is the slice at t_k.
template <typename Scalar>
using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-node flags with the same layout as Field.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class NodeKind : unsigned char { Interior, Lateral, Initial };

/// Uniform tensor grid on (0,1)^d x (0,T), d in {1,2}.
///
/// Nodes are numbered x-fastest and include the boundary layer, so a slice of
/// a grid with nx interior nodes per axis has (nx+2) or (nx+2)(ny+2) entries.
/// Boundary nodes store the lateral Dirichlet data explicitly.
template <typename Scalar>
class SpaceTimeGrid {
public:
  SpaceTimeGrid(int dim, Index nx, Index ny, Index nt, Scalar T)
      : dim_(dim), nx_(nx), ny_(dim == 2 ? ny : 0), nt_(nt), T_(T) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dimension must be 1 or 2");
    if (nx < 1) throw std::invalid_argument("grid: nx must be >= 1");
    if (dim == 2 && ny < 1) throw std::invalid_argument("grid: ny must be >= 1");
    if (nt < 1) throw std::invalid_argument("grid: nt must be >= 1");
    if (!(T > Scalar(0)) || !std::isfinite(static_cast<double>(T)))
      throw std::invalid_argument("grid: T must be positive");
    dx_ = Scalar(1) / Scalar(nx_ + 1);
    dy_ = dim == 2 ? Scalar(1) / Scalar(ny_ + 1) : Scalar(1);
    dt_ = T_ / Scalar(nt_);
    interior_.reserve(static_cast<std::size_t>(nx_ * (dim == 2 ? ny_ : 1)));
    for (Index j = 0; j < points_y(); ++j)
      for (Index i = 0; i < points_x(); ++i)
        if (!on_lateral(node(i, j))) interior_.push_back(node(i, j));
  }

  static SpaceTimeGrid line(Index nx, Index nt, Scalar T) { return {1, nx, 0, nt, T}; }
  static SpaceTimeGrid square(Index nx, Index ny, Index nt, Scalar T) { return {2, nx, ny, nt, T}; }

  int dim() const { return dim_; }
  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index nt() const { return nt_; }
  Scalar T() const { return T_; }
  Scalar dx() const { return dx_; }
  Scalar dy() const { return dy_; }
  Scalar dt() const { return dt_; }

  Index points_x() const { return nx_ + 2; }
  Index points_y() const { return dim_ == 2 ? ny_ + 2 : 1; }
  Index slice_size() const { return points_x() * points_y(); }
  Index time_points() const { return nt_ + 1; }

  Index node(Index i, Index j = 0) const { return j * points_x() + i; }
  Index ix(Index n) const { return n % points_x(); }
  Index iy(Index n) const { return n / points_x(); }

  bool on_lateral(Index n) const {
    const Index i = ix(n);
    if (i == 0 || i == points_x() - 1) return true;
    if (dim_ == 2) {
      const Index j = iy(n);
      return j == 0 || j == points_y() - 1;
    }
    return false;
  }

  Scalar x(Index n) const { return Scalar(ix(n)) * dx_; }
  Scalar y(Index n) const { return dim_ == 2 ? Scalar(iy(n)) * dy_ : Scalar(0); }
  Scalar t(Index k) const { return Scalar(k) * dt_; }

  /// Interior node ids in storage order.
  const std::vector<Index>& interior() const { return interior_; }

  /// Volume attached to a node by the tensor trapezoidal rule.
  Scalar node_volume(Index n) const {
    Scalar v = dx_;
    const Index i = ix(n);
    if (i == 0 || i == points_x() - 1) v /= Scalar(2);
    if (dim_ == 2) {
      v *= dy_;
      const Index j = iy(n);
      if (j == 0 || j == points_y() - 1) v /= Scalar(2);
    }
    return v;
  }

  Slice<Scalar> zero_slice() const { return Slice<Scalar>::Zero(slice_size()); }
  Field<Scalar> zero_field() const { return Field<Scalar>::Zero(slice_size(), time_points()); }

  /// Samples f(x, y) on one slice (y = 0 in 1D).
  template <typename F>
  Slice<Scalar> sample(F&& f) const {
    Slice<Scalar> s(slice_size());
    for (Index n = 0; n < slice_size(); ++n) s[n] = f(x(n), y(n));
    return s;
  }

  /// Samples f(x, y, t) on every space-time node.
  template <typename F>
  Field<Scalar> sample_field(F&& f) const {
    Field<Scalar> u(slice_size(), time_points());
    for (Index k = 0; k < time_points(); ++k)
      for (Index n = 0; n < slice_size(); ++n) u(n, k) = f(x(n), y(n), t(k));
    return u;
  }

  NodeKind classify(Index n, Index k) const {
    if (on_lateral(n)) return NodeKind::Lateral;
    if (k == 0) return NodeKind::Initial;
    return NodeKind::Interior;
  }

  bool operator==(const SpaceTimeGrid& o) const {
    return dim_ == o.dim_ && nx_ == o.nx_ && ny_ == o.ny_ && nt_ == o.nt_ && T_ == o.T_;
  }

private:
  int dim_;
  Index nx_, ny_, nt_;
  Scalar T_, dx_{}, dy_{}, dt_{};
  std::vector<Index> interior_;
};

namespace detail {

template <typename Scalar, typename Derived>
void require_slice(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f,
                   const char* what) {
  if (f.size() != grid.slice_size())
    throw std::invalid_argument(std::string(what) + ": slice size does not match grid");
}

template <typename Scalar>
void require_field(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& f, const char* what) {
  if (f.rows() != grid.slice_size() || f.cols() != grid.time_points())
    throw std::invalid_argument(std::string(what) + ": field shape does not match grid");
}

}  // namespace detail

/// Five-point (three-point in 1D) Laplacian on interior nodes. Boundary
/// entries of the result are zero.
template <typename Scalar, typename Derived>
Slice<Scalar> laplacian(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f) {
  detail::require_slice(grid, f, "laplacian");
  Slice<Scalar> out = Slice<Scalar>::Zero(grid.slice_size());
  const Scalar cx = Scalar(1) / (grid.dx() * grid.dx());
  const Scalar cy = grid.dim() == 2 ? Scalar(1) / (grid.dy() * grid.dy()) : Scalar(0);
  const Index px = grid.points_x();
  for (Index n : grid.interior()) {
    Scalar v = cx * (f[n - 1] - Scalar(2) * f[n] + f[n + 1]);
    if (grid.dim() == 2) v += cy * (f[n - px] - Scalar(2) * f[n] + f[n + px]);
    out[n] = v;
  }
  return out;
}

/// Laplacian rows for the nodes in `unknowns`, columns for all slice nodes.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> laplacian_rows(const SpaceTimeGrid<Scalar>& grid,
                                           const std::vector<Index>& unknowns) {
  using Triplet = Eigen::Triplet<Scalar>;
  const Scalar cx = Scalar(1) / (grid.dx() * grid.dx());
  const Scalar cy = grid.dim() == 2 ? Scalar(1) / (grid.dy() * grid.dy()) : Scalar(0);
  const Index px = grid.points_x();
  std::vector<Triplet> trips;
  trips.reserve(unknowns.size() * (grid.dim() == 2 ? 5 : 3));
  for (std::size_t r = 0; r < unknowns.size(); ++r) {
    const Index n = unknowns[r];
    const Index row = static_cast<Index>(r);
    trips.emplace_back(row, n, Scalar(-2) * (cx + cy));
    trips.emplace_back(row, n - 1, cx);
    trips.emplace_back(row, n + 1, cx);
    if (grid.dim() == 2) {
      trips.emplace_back(row, n - px, cy);
      trips.emplace_back(row, n + px, cy);
    }
  }
  Eigen::SparseMatrix<Scalar> L(static_cast<Index>(unknowns.size()), grid.slice_size());
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

/// Trapezoidal quadrature over the closed unit interval/square.
template <typename Scalar, typename Derived>
Scalar integrate(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f) {
  detail::require_slice(grid, f, "integrate");
  Scalar s(0);
  for (Index n = 0; n < grid.slice_size(); ++n) s += grid.node_volume(n) * f[n];
  return s;
}

/// Trapezoidal quadrature in space and time.
template <typename Scalar>
Scalar integrate_field(const SpaceTimeGrid<Scalar>& grid, const Field<Scalar>& f) {
  detail::require_field(grid, f, "integrate_field");
  Scalar s(0);
  for (Index k = 0; k < grid.time_points(); ++k) {
    const Scalar w = (k == 0 || k == grid.nt()) ? grid.dt() / Scalar(2) : grid.dt();
    s += w * integrate(grid, f.col(k));
  }
  return s;
}

/// Edge-based discrete Dirichlet form: sum over grid edges of
/// wbar^2 * (delta f)(delta g) / h^2 times the edge volume, where wbar is the
/// midpoint value of `weight`. Tangential direction uses trapezoidal weights.
template <typename Scalar, typename D1, typename D2, typename D3>
Scalar dirichlet_form(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<D1>& f,
                      const Eigen::MatrixBase<D2>& g, const Eigen::MatrixBase<D3>& weight) {
  detail::require_slice(grid, f, "dirichlet_form");
  detail::require_slice(grid, g, "dirichlet_form");
  detail::require_slice(grid, weight, "dirichlet_form");
  const Index px = grid.points_x();
  const Index py = grid.points_y();
  Scalar s(0);
  for (Index j = 0; j < py; ++j) {
    Scalar wy = grid.dim() == 2 ? grid.dy() : Scalar(1);
    if (grid.dim() == 2 && (j == 0 || j == py - 1)) wy /= Scalar(2);
    for (Index i = 0; i + 1 < px; ++i) {
      const Index a = grid.node(i, j), b = grid.node(i + 1, j);
      const Scalar wm = (weight[a] + weight[b]) / Scalar(2);
      s += wy * wm * wm * (f[b] - f[a]) * (g[b] - g[a]) / grid.dx();
    }
  }
  if (grid.dim() == 2) {
    for (Index i = 0; i < px; ++i) {
      Scalar wx = grid.dx();
      if (i == 0 || i == px - 1) wx /= Scalar(2);
      for (Index j = 0; j + 1 < py; ++j) {
        const Index a = grid.node(i, j), b = grid.node(i, j + 1);
        const Scalar wm = (weight[a] + weight[b]) / Scalar(2);
        s += wx * wm * wm * (f[b] - f[a]) * (g[b] - g[a]) / grid.dy();
      }
    }
  }
  return s;
}

template <typename Scalar, typename D1, typename D2>
Scalar dirichlet_form(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<D1>& f,
                      const Eigen::MatrixBase<D2>& g) {
  return dirichlet_form(grid, f, g, Slice<Scalar>::Ones(grid.slice_size()));
}

/// Quadrature of weight^2 |grad f|^2 over the domain.
template <typename Scalar, typename D1, typename D2>
Scalar h1_seminorm_sq(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<D1>& f,
                      const Eigen::MatrixBase<D2>& weight) {
  return dirichlet_form(grid, f, f, weight);
}

template <typename Scalar, typename D1>
Scalar h1_seminorm_sq(const SpaceTimeGrid<Scalar>& grid, const Eigen::MatrixBase<D1>& f) {
  return dirichlet_form(grid, f, f);
}

/// Marks (Omega x {0}) u (dOmega x [0,T)). Top-slice nodes are never marked.
template <typename Scalar>
Mask parabolic_boundary_mask(const SpaceTimeGrid<Scalar>& grid) {
  Mask mask = Mask::Constant(grid.slice_size(), grid.time_points(), false);
  for (Index k = 0; k < grid.nt(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n)
      mask(n, k) = k == 0 || grid.on_lateral(n);
  return mask;
}

/// Interior-node max and min of one slice.
template <typename Scalar, typename Derived>
std::pair<Scalar, Scalar> interior_extrema(const SpaceTimeGrid<Scalar>& grid,
                                           const Eigen::MatrixBase<Derived>& f) {
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  for (Index n : grid.interior()) {
    hi = std::max<Scalar>(hi, f[n]);
    lo = std::min<Scalar>(lo, f[n]);
  }
  return {hi, lo};
}

template <typename Derived>
bool all_finite_nonnegative(const Eigen::DenseBase<Derived>& f) {
  for (Index c = 0; c < f.cols(); ++c)
    for (Index r = 0; r < f.rows(); ++r) {
      const double v = static_cast<double>(f(r, c));
      if (!std::isfinite(v) || v < 0.0) return false;
    }
  return true;
}

}  // namespace pmeobs
