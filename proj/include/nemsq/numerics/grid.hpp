#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nemsq/error.hpp"

namespace nemsq {

// Uniform 1D grid in units of x_u. Node i sits at x_min + i * spacing.
class SpatialGrid {
 public:
  static constexpr std::size_t kMinPoints = 16;

  SpatialGrid(double x_min, double x_max, std::size_t n_points)
      : x_min_(x_min), x_max_(x_max), n_(n_points) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max))
      throw ConfigError("grid bounds must be finite");
    if (!(x_max > x_min)) throw ConfigError("grid requires x_max > x_min");
    if (n_points < kMinPoints)
      throw ConfigError("grid requires n_points >= 16, got " +
                        std::to_string(n_points));
    spacing_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return spacing_; }
  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * spacing_; }
  bool symmetric() const { return x_min_ == -x_max_; }

  std::vector<double> nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
  }

  bool operator==(const SpatialGrid& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_ == o.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double spacing_;
};

inline SpatialGrid build_grid(double x_min, double x_max, std::size_t n_points) {
  return SpatialGrid(x_min, x_max, n_points);
}

// Half-width of the default symmetric domain for a double well with minima
// at +-A: A + 6 sigma with sigma the harmonic width, never below 8.
inline double default_half_width(double A) {
  double half = 8.0;
  if (A > 0.0) {
    const double sigma = 1.0 / std::sqrt(2.0 * A * std::sqrt(2.0));
    half = std::max(half, A + 6.0 * sigma);
  }
  return half;
}

inline constexpr std::size_t kDefaultGridPoints = 2049;

inline SpatialGrid double_well_grid(double A, std::size_t n_points = kDefaultGridPoints) {
  const double half = default_half_width(A);
  return SpatialGrid(-half, half, n_points);
}

}  // namespace nemsq
