#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nemsq/error.hpp"
#include "nemsq/numerics/wavefunction.hpp"

namespace nemsq {

struct Observation {
  double magnitude;
  double phase;  // principal value in [0, 2 pi)
};

inline double wrap_phase(double p) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  p = std::fmod(p, two_pi);
  if (p < 0.0) p += two_pi;
  if (p >= two_pi) p = 0.0;
  return p;
}

// Cubic Lagrange interpolation of the amplitude through the four nearest
// nodes (stencil shifted inward at the domain edges).
inline Complex interpolate(const WavefunctionState& state, double x) {
  const SpatialGrid& g = state.grid();
  if (!(x >= g.x_min() && x <= g.x_max()))
    throw DomainError("probe position outside the grid domain");
  const double h = g.spacing();
  const auto n = static_cast<long>(g.size());
  const double u = (x - g.x_min()) / h;
  long left = static_cast<long>(std::floor(u));
  long start = std::clamp(left - 1, 0L, n - 4);
  const double s = u - static_cast<double>(start);  // position relative to node `start`
  Complex out{0.0, 0.0};
  for (int j = 0; j < 4; ++j) {
    double w = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) w *= (s - m) / static_cast<double>(j - m);
    out += w * state[static_cast<std::size_t>(start + j)];
  }
  return out;
}

inline Observation observe(const WavefunctionState& state, double x_probe) {
  const Complex z = interpolate(state, x_probe);
  return {std::abs(z), wrap_phase(std::arg(z))};
}

}  // namespace nemsq
