#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "nemsq/error.hpp"
#include "nemsq/numerics/tridiagonal.hpp"

namespace nemsq {

// Lowest eigenpairs of a symmetric tridiagonal operator. Eigenvectors are
// unit vectors in the plain Euclidean norm.
struct EigenResult {
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
};

enum class SymmetryMode {
  kDetect,  // split into even/odd blocks when the operator is mirror symmetric
  kNone,
};

struct EigenOptions {
  SymmetryMode symmetry = SymmetryMode::kDetect;
  double residual_tolerance = 1e-8;
  int max_iterations = 8;
  int max_shift_retries = 4;
};

namespace detail {

// Number of eigenvalues strictly below x (Sturm sequence via LDL^T pivots).
inline std::size_t sturm_count(const TridiagonalOperator& op, double x, double pivmin) {
  const std::size_t n = op.size();
  std::size_t count = 0;
  double q = op.diagonal[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    const double e = op.off_diagonal[i - 1];
    q = op.diagonal[i] - x - e * e / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

inline std::pair<double, double> gershgorin(const TridiagonalOperator& op) {
  const std::size_t n = op.size();
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(op.off_diagonal[i - 1]);
    if (i + 1 < n) r += std::abs(op.off_diagonal[i]);
    lo = std::min(lo, op.diagonal[i] - r);
    hi = std::max(hi, op.diagonal[i] + r);
  }
  return {lo, hi};
}

// k lowest eigenvalues by bisection, each converged to a few ulps.
inline std::vector<double> bisect_lowest(const TridiagonalOperator& op, std::size_t k) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const auto [glo, ghi] = gershgorin(op);
  const double scale = std::max(std::abs(glo), std::abs(ghi));
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, scale * scale);
  const double pad = 2.0 * eps * scale + pivmin;

  std::vector<double> values(k);
  double lower_start = glo - pad;
  for (std::size_t j = 0; j < k; ++j) {
    double lo = lower_start;
    double hi = ghi + pad;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi)) + pivmin) break;
      if (sturm_count(op, mid, pivmin) > j)
        hi = mid;
      else
        lo = mid;
    }
    values[j] = 0.5 * (lo + hi);
    lower_start = lo;
  }
  return values;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double residual_norm(const TridiagonalOperator& op, const std::vector<double>& v,
                            double lambda) {
  const auto hv = op.apply(v);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = hv[i] - lambda * v[i];
    s += r * r;
  }
  return std::sqrt(s / dot(v, v));
}

// Inverse iteration for every eigenvalue; vectors belonging to a cluster are
// orthogonalized against their already-computed neighbours.
inline std::vector<std::vector<double>> inverse_iteration(const TridiagonalOperator& op,
                                                         const std::vector<double>& values,
                                                         const EigenOptions& opt) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const std::size_t n = op.size();
  const double tnorm = std::max(op.norm(), 1.0);
  const double cluster_gap = 1e-3 * tnorm;
  const double pivot_floor = eps * tnorm;

  std::vector<std::vector<double>> vectors;
  vectors.reserve(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    std::size_t first_in_cluster = j;
    while (first_in_cluster > 0 &&
           values[first_in_cluster] - values[first_in_cluster - 1] < cluster_gap)
      --first_in_cluster;

    bool converged = false;
    std::vector<double> v(n);
    for (int attempt = 0; attempt <= opt.max_shift_retries && !converged; ++attempt) {
      const double shift =
          values[j] + (attempt == 0 ? 0.0 : std::ldexp(eps * tnorm, 2 * attempt));
      const ShiftedTridiagonalLU lu(op, shift, pivot_floor);
      // Deterministic, non-symmetric start vector.
      for (std::size_t i = 0; i < n; ++i)
        v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i + 1) + static_cast<double>(j + attempt));
      for (int it = 0; it < opt.max_iterations; ++it) {
        lu.solve_in_place(v);
        for (std::size_t c = first_in_cluster; c < j; ++c) {
          const double p = dot(vectors[c], v);
          for (std::size_t i = 0; i < n; ++i) v[i] -= p * vectors[c][i];
        }
        const double nv = std::sqrt(dot(v, v));
        if (!(nv > 0.0) || !std::isfinite(nv)) break;
        for (auto& x : v) x /= nv;
        if (it >= 1 && residual_norm(op, v, values[j]) < opt.residual_tolerance) {
          converged = true;
          break;
        }
      }
    }
    if (!converged)
      throw ConvergenceError("inverse iteration did not converge for eigenvalue index " +
                             std::to_string(j));
    // Fix the sign so that the largest-magnitude component is positive.
    const auto it = std::max_element(v.begin(), v.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*it < 0.0)
      for (auto& x : v) x = -x;
    vectors.push_back(v);
  }
  return vectors;
}

inline EigenResult solve_plain(const TridiagonalOperator& op, std::size_t k,
                               const EigenOptions& opt) {
  EigenResult r;
  r.eigenvalues = bisect_lowest(op, k);
  r.eigenvectors = inverse_iteration(op, r.eigenvalues, opt);
  return r;
}

inline bool mirror_symmetric(const TridiagonalOperator& op) {
  const std::size_t n = op.size();
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * op.norm();
  for (std::size_t i = 0; i < n / 2; ++i)
    if (std::abs(op.diagonal[i] - op.diagonal[n - 1 - i]) > tol) return false;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (std::abs(op.off_diagonal[i] - op.off_diagonal[n - 2 - i]) > tol) return false;
  return true;
}

// Even and odd blocks of a mirror-symmetric operator, built from the left half.
struct ParityBlocks {
  TridiagonalOperator even;
  TridiagonalOperator odd;
  double center_scale;  // even-block center entry maps back with this factor
};

inline ParityBlocks parity_blocks(const TridiagonalOperator& op) {
  const std::size_t n = op.size();
  const std::size_t m = n / 2;
  ParityBlocks b;
  if (n % 2 == 1) {
    // Centre node m: even block keeps it with the coupling scaled by sqrt(2);
    // odd block pins it to zero.
    b.even.diagonal.assign(op.diagonal.begin(), op.diagonal.begin() + m + 1);
    b.even.off_diagonal.assign(op.off_diagonal.begin(), op.off_diagonal.begin() + m);
    b.even.off_diagonal[m - 1] *= std::sqrt(2.0);
    b.odd.diagonal.assign(op.diagonal.begin(), op.diagonal.begin() + m);
    b.odd.off_diagonal.assign(op.off_diagonal.begin(), op.off_diagonal.begin() + m - 1);
    b.center_scale = std::sqrt(2.0);
  } else {
    const double e = op.off_diagonal[m - 1];
    b.even.diagonal.assign(op.diagonal.begin(), op.diagonal.begin() + m);
    b.even.off_diagonal.assign(op.off_diagonal.begin(), op.off_diagonal.begin() + m - 1);
    b.odd = b.even;
    b.even.diagonal[m - 1] += e;
    b.odd.diagonal[m - 1] -= e;
    b.center_scale = 1.0;
  }
  return b;
}

inline std::vector<double> unfold(const std::vector<double>& half, std::size_t n, bool even,
                                  double center_scale) {
  std::vector<double> full(n, 0.0);
  const std::size_t m = n / 2;
  const double sign = even ? 1.0 : -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    full[i] = half[i];
    full[n - 1 - i] = sign * half[i];
  }
  if (n % 2 == 1 && even) full[m] = center_scale * half[m];
  const double nv = std::sqrt(dot(full, full));
  for (auto& x : full) x /= nv;
  return full;
}

inline EigenResult solve_parity(const TridiagonalOperator& op, std::size_t k,
                                const EigenOptions& opt) {
  const std::size_t n = op.size();
  const ParityBlocks blocks = parity_blocks(op);
  const std::size_t ke = std::min(k, blocks.even.size());
  const std::size_t ko = std::min(k, blocks.odd.size());
  const EigenResult even = solve_plain(blocks.even, ke, opt);
  const EigenResult odd = solve_plain(blocks.odd, ko, opt);

  EigenResult r;
  std::size_t ie = 0, io = 0;
  while (r.eigenvalues.size() < k && (ie < ke || io < ko)) {
    const bool take_even =
        io >= ko || (ie < ke && even.eigenvalues[ie] <= odd.eigenvalues[io]);
    if (take_even) {
      r.eigenvalues.push_back(even.eigenvalues[ie]);
      r.eigenvectors.push_back(unfold(even.eigenvectors[ie], n, true, blocks.center_scale));
      ++ie;
    } else {
      r.eigenvalues.push_back(odd.eigenvalues[io]);
      r.eigenvectors.push_back(unfold(odd.eigenvectors[io], n, false, blocks.center_scale));
      ++io;
    }
  }
  return r;
}

}  // namespace detail

// k lowest eigenpairs by Sturm-sequence bisection and inverse iteration.
// Mirror-symmetric operators are split into parity blocks first, so each
// returned vector has definite parity even when levels are nearly degenerate.
inline EigenResult eigensolve(const TridiagonalOperator& op, std::size_t k,
                              const EigenOptions& opt = {}) {
  const std::size_t n = op.size();
  if (n < 2 || op.off_diagonal.size() + 1 != n)
    throw ConfigError("malformed tridiagonal operator");
  if (k < 1 || 4 * k > n)
    throw ConfigError("eigensolve requires 1 <= k <= n/4, got k = " + std::to_string(k));
  if (opt.symmetry == SymmetryMode::kDetect && n >= 8 && detail::mirror_symmetric(op))
    return detail::solve_parity(op, k, opt);
  return detail::solve_plain(op, k, opt);
}

}  // namespace nemsq
