#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "nemsq/error.hpp"
#include "nemsq/numerics/grid.hpp"

namespace nemsq {

// Real symmetric tridiagonal matrix; only one off-diagonal is stored.
struct TridiagonalOperator {
  std::vector<double> diagonal;
  std::vector<double> off_diagonal;  // size() - 1 entries

  std::size_t size() const { return diagonal.size(); }

  std::vector<double> apply(std::span<const double> v) const {
    const std::size_t n = size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diagonal[i] * v[i];
      if (i > 0) s += off_diagonal[i - 1] * v[i - 1];
      if (i + 1 < n) s += off_diagonal[i] * v[i + 1];
      out[i] = s;
    }
    return out;
  }

  // Infinity norm, used to scale solver tolerances.
  double norm() const {
    const std::size_t n = size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = std::abs(diagonal[i]);
      if (i > 0) r += std::abs(off_diagonal[i - 1]);
      if (i + 1 < n) r += std::abs(off_diagonal[i]);
      m = std::max(m, r);
    }
    return m;
  }
};

// -1/2 d^2/dx^2 + V(x) by central differences with Dirichlet boundaries.
template <class Potential>
TridiagonalOperator discretize_hamiltonian(const SpatialGrid& grid, Potential&& potential) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double kinetic = 1.0 / (h * h);
  TridiagonalOperator op;
  op.diagonal.resize(n);
  op.off_diagonal.assign(n - 1, -0.5 * kinetic);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.x(i);
    const double v = potential(x);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "potential is not finite at node " << i << " (x = " << x << ")";
      throw DomainError(msg.str());
    }
    op.diagonal[i] = kinetic + v;
  }
  return op;
}

// LU factorization of (T - shift I) with partial pivoting; the upper factor
// has two superdiagonals. Mirrors the classic general tridiagonal scheme.
class ShiftedTridiagonalLU {
 public:
  ShiftedTridiagonalLU(const TridiagonalOperator& op, double shift, double pivot_floor) {
    const std::size_t n = op.size();
    d_.resize(n);
    du_.assign(n > 0 ? n - 1 : 0, 0.0);
    dl_.assign(n > 0 ? n - 1 : 0, 0.0);
    du2_.assign(n > 1 ? n - 2 : 0, 0.0);
    swap_.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) d_[i] = op.diagonal[i] - shift;
    std::vector<double> lower(op.off_diagonal);
    for (std::size_t i = 0; i + 1 < n; ++i) du_[i] = op.off_diagonal[i];

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(lower[i])) {
        if (d_[i] == 0.0) d_[i] = pivot_floor;
        const double f = lower[i] / d_[i];
        dl_[i] = f;
        d_[i + 1] -= f * du_[i];
      } else {
        const double f = d_[i] / lower[i];
        d_[i] = lower[i];
        dl_[i] = f;
        const double tmp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = tmp - f * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -f * du_[i + 1];
        }
        swap_[i] = true;
      }
    }
    if (n > 0 && d_[n - 1] == 0.0) d_[n - 1] = pivot_floor;
    for (auto& p : d_)
      if (std::abs(p) < pivot_floor) p = std::copysign(pivot_floor, p == 0.0 ? 1.0 : p);
  }

  void solve_in_place(std::span<double> b) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swap_[i]) {
        const double tmp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = tmp - dl_[i] * b[i + 1];
      } else {
        b[i + 1] -= dl_[i] * b[i];
      }
    }
    for (std::size_t k = n; k-- > 0;) {
      double s = b[k];
      if (k + 1 < n) s -= du_[k] * b[k + 1];
      if (k + 2 < n) s -= du2_[k] * b[k + 2];
      b[k] = s / d_[k];
    }
  }

 private:
  std::vector<double> d_, du_, dl_, du2_;
  std::vector<bool> swap_;
};

}  // namespace nemsq
