#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmeobs/grid.hpp"
#include "pmeobs/obstacle.hpp"

namespace pmeobs::fixtures {

/// (1 - s^2)^2 for |s| < 1, else 0. C^1 with compact support.
inline double bump_profile(double s) {
  const double q = 1.0 - s * s;
  return q > 0.0 ? q * q : 0.0;
}

inline double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

/// C^1 plateau on (a, b): zero outside, smoothstep ramps of length (b-a)/4.
inline double window_profile(double t, double a, double b) {
  if (t <= a || t >= b) return 0.0;
  const double ramp = (b - a) / 4.0;
  return std::min(smoothstep((t - a) / ramp), smoothstep((b - t) / ramp));
}

struct BumpShape {
  double amplitude = 1.0;
  std::vector<double> center{0.5, 0.5};
  double radius = 0.2;
  double t_begin = 0.2;
  double t_end = 0.8;
  /// Product of one-dimensional bumps instead of a radial bump (2D only).
  bool product = false;
};

/// psi(x, t) = A B(x) tau(t) on the grid, zero on lateral nodes.
inline Obstacle<double> bump_obstacle(const SpaceTimeGrid<double>& grid, const BumpShape& s) {
  if (!(s.radius > 0.0)) throw std::invalid_argument("bump obstacle: radius must be positive");
  if (!(s.amplitude >= 0.0)) throw std::invalid_argument("bump obstacle: amplitude must be >= 0");
  if (s.center.size() < static_cast<std::size_t>(grid.dim()))
    throw std::invalid_argument("bump obstacle: centre needs one coordinate per dimension");
  const double cx = s.center[0];
  const double cy = grid.dim() == 2 ? s.center[1] : 0.0;
  auto space = [&](double x, double y) {
    const double sx = (x - cx) / s.radius;
    if (grid.dim() == 1) return bump_profile(sx);
    const double sy = (y - cy) / s.radius;
    return s.product ? bump_profile(sx) * bump_profile(sy) : bump_profile(std::sqrt(sx * sx + sy * sy));
  };
  Obstacle<double> obs;
  obs.psi = grid.sample_field([&](double x, double y, double t) {
    return s.amplitude * space(x, y) * window_profile(t, s.t_begin, s.t_end);
  });
  for (Index k = 0; k < grid.time_points(); ++k)
    for (Index n = 0; n < grid.slice_size(); ++n)
      if (grid.on_lateral(n)) obs.psi(n, k) = 0.0;
  obs.compact_support = true;
  obs.holder_exponent = 1.0;
  return obs;
}

/// A = 1, r = 0.2, centre 1/2, window (0.2 T, 0.8 T).
inline Obstacle<double> default_bump_obstacle(const SpaceTimeGrid<double>& grid) {
  BumpShape s;
  s.t_begin = 0.2 * grid.T();
  s.t_end = 0.8 * grid.T();
  return bump_obstacle(grid, s);
}

}  // namespace pmeobs::fixtures
