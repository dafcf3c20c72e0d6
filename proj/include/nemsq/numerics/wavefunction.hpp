#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "nemsq/error.hpp"
#include "nemsq/numerics/grid.hpp"

namespace nemsq {

using Complex = std::complex<double>;

// Complex amplitudes on a grid, normalized so that sum |psi_i|^2 h = 1.
class WavefunctionState {
 public:
  WavefunctionState(SpatialGrid grid, std::vector<Complex> amplitudes, double time = 0.0)
      : grid_(std::move(grid)), amps_(std::move(amplitudes)), time_(time) {
    if (amps_.size() != grid_.size())
      throw ConfigError("amplitude count does not match grid size");
  }

  // Builds a state from grid samples and rescales it to unit norm.
  static WavefunctionState normalized(SpatialGrid grid, std::vector<Complex> amplitudes,
                                      double time = 0.0) {
    WavefunctionState s(std::move(grid), std::move(amplitudes), time);
    s.normalize();
    return s;
  }

  const SpatialGrid& grid() const { return grid_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }
  Complex& operator[](std::size_t i) { return amps_[i]; }
  std::size_t size() const { return amps_.size(); }

  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s * grid_.spacing();
  }

  void normalize() {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2))
      throw DomainError("cannot normalize a zero or non-finite wavefunction");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& a : amps_) a *= scale;
  }

  // Image under x -> -x; requires a symmetric grid.
  WavefunctionState mirrored() const {
    if (!grid_.symmetric()) throw DomainError("mirror requires a symmetric grid");
    std::vector<Complex> out(amps_.rbegin(), amps_.rend());
    return WavefunctionState(grid_, std::move(out), time_);
  }

 private:
  SpatialGrid grid_;
  std::vector<Complex> amps_;
  double time_;
};

// <a|b> = sum conj(a_i) b_i h
inline Complex inner_product(const WavefunctionState& a, const WavefunctionState& b) {
  if (!(a.grid() == b.grid())) throw DomainError("inner product of states on different grids");
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * a.grid().spacing();
}

inline double overlap(const WavefunctionState& a, const WavefunctionState& b) {
  return std::abs(inner_product(a, b));
}

inline double max_boundary_amplitude(const WavefunctionState& s) {
  return std::max(std::abs(s[0]), std::abs(s[s.size() - 1]));
}

}  // namespace nemsq
