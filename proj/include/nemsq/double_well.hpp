#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nemsq/error.hpp"
#include "nemsq/numerics/eigensolve.hpp"
#include "nemsq/numerics/grid.hpp"
#include "nemsq/numerics/tridiagonal.hpp"
#include "nemsq/numerics/wavefunction.hpp"
#include "nemsq/parallel.hpp"

namespace nemsq {

// Dimensionless quartic double well (x^2 - A^2)^2 + F x.
struct DoubleWellParams {
  double A = 3.0;  // well separation, units of x_u
  double F = 0.0;  // linear field bias, dimensionless

  void validate() const {
    if (!std::isfinite(A) || A < 0.0) throw ConfigError("well separation A must be finite and >= 0");
    if (!std::isfinite(F)) throw ConfigError("field bias F must be finite");
  }
};

inline double potential_value(const DoubleWellParams& p, double x) {
  const double s = x * x - p.A * p.A;
  return s * s + p.F * x;
}

// Harmonic expansion around +-A: V ~ 4 A^2 (x -+ A)^2.
struct HarmonicApprox {
  double omega;
  double ground_energy;
  double width_sigma;
  double center;  // wells sit at +-center
};

inline HarmonicApprox harmonic_approx(double A) {
  if (!(A > 0.0)) throw DomainError("harmonic approximation requires A > 0");
  const double omega = 2.0 * A * std::numbers::sqrt2;
  return {omega, 0.5 * omega, 1.0 / std::sqrt(omega), A};
}

// Field unit E_u = omega / a0 at the given well separation.
inline double field_unit(double A) { return harmonic_approx(A).omega / A; }

enum class Side { kPlus, kMinus };

inline double side_sign(Side s) { return s == Side::kPlus ? 1.0 : -1.0; }

// Gaussians are only a good qubit basis for A >= 2.
inline constexpr double kGaussianValidityA = 2.0;

struct GaussianStateResult {
  WavefunctionState state;
  std::optional<std::string> warning;
};

// Harmonic ground state localized at +-A, renormalized on the grid.
inline GaussianStateResult gaussian_state_checked(const DoubleWellParams& p, Side side,
                                                  const SpatialGrid& grid) {
  p.validate();
  const HarmonicApprox h = harmonic_approx(p.A);
  const double c = side_sign(side) * p.A;
  const double peak = std::pow(h.omega / std::numbers::pi, 0.25);
  std::vector<Complex> amps(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = grid.x(i) - c;
    amps[i] = peak * std::exp(-0.5 * h.omega * d * d);
  }
  GaussianStateResult r{WavefunctionState::normalized(grid, std::move(amps)), std::nullopt};
  if (p.A < kGaussianValidityA)
    r.warning = "A = " + std::to_string(p.A) + " is below the Gaussian validity bound A >= 2";
  return r;
}

inline WavefunctionState gaussian_state(const DoubleWellParams& p, Side side,
                                        const SpatialGrid& grid) {
  return gaussian_state_checked(p, side, grid).state;
}

inline TridiagonalOperator double_well_hamiltonian(const DoubleWellParams& p,
                                                   const SpatialGrid& grid) {
  p.validate();
  return discretize_hamiltonian(grid, [&p](double x) { return potential_value(p, x); });
}

// Grid eigenvector (Euclidean unit norm) as a wavefunction with unit L2 norm.
inline WavefunctionState eigenstate_as_wavefunction(const SpatialGrid& grid,
                                                    const std::vector<double>& v) {
  std::vector<Complex> amps(v.begin(), v.end());
  return WavefunctionState::normalized(grid, std::move(amps));
}

inline EigenResult double_well_spectrum(const DoubleWellParams& p, const SpatialGrid& grid,
                                        std::size_t k) {
  return eigensolve(double_well_hamiltonian(p, grid), k);
}

// ---------------------------------------------------------------------------
// Level splitting

struct Splitting {
  double delta;
  double log10_delta;  // log10 |delta|; -inf when delta == 0
  bool floor_limited;
  double e0;
  double e1;
};

// Splittings below this fraction of E0 are not resolvable in double precision.
inline constexpr double kSplittingFloor = 1e-9;

inline Splitting splitting(double A, std::size_t n_points = kDefaultGridPoints) {
  if (!(A >= 0.0)) throw ConfigError("splitting requires A >= 0");
  const SpatialGrid grid = double_well_grid(A, n_points);
  const auto op = double_well_hamiltonian({A, 0.0}, grid);
  const auto r = eigensolve(op, 2);
  Splitting s;
  s.e0 = r.eigenvalues[0];
  s.e1 = r.eigenvalues[1];
  s.delta = s.e1 - s.e0;
  s.log10_delta = s.delta == 0.0 ? -INFINITY : std::log10(std::abs(s.delta));
  s.floor_limited = std::abs(s.delta) < kSplittingFloor * std::abs(s.e0);
  return s;
}

// ---------------------------------------------------------------------------
// Spectrum scans

enum class ScanVariable { kWellSeparation, kField };

struct SpectrumRow {
  double value;
  std::vector<double> energies;
  std::string flags;  // empty when the point solved cleanly
};

struct SpectrumScanOptions {
  std::size_t k = 6;
  std::size_t n_points = kDefaultGridPoints;
  unsigned parallelism = 1;
  // Field values are given in units of E_u = omega/A when true.
  bool field_in_units = true;
  // Keep eigenvectors for level tracking (memory heavy at large k).
  bool keep_vectors = false;
};

struct SpectrumScan {
  ScanVariable variable;
  std::vector<SpectrumRow> rows;
  std::vector<std::vector<std::vector<double>>> vectors;  // per row, when kept
  std::vector<SpatialGrid> grids;
};

inline SpectrumScan spectrum_scan(ScanVariable variable, const std::vector<double>& values,
                                  const DoubleWellParams& fixed,
                                  const SpectrumScanOptions& opt = {}) {
  if (values.empty()) throw ConfigError("spectrum scan requires at least one value");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[i - 1]) throw ConfigError("spectrum scan range must be sorted");
  if (opt.k < 1) throw ConfigError("spectrum scan requires k >= 1");

  struct Point {
    SpectrumRow row;
    std::vector<std::vector<double>> vecs;
    std::optional<SpatialGrid> grid;
  };
  auto points = parallel_map(values.size(), opt.parallelism, [&](std::size_t i) {
    Point pt;
    pt.row.value = values[i];
    DoubleWellParams p = fixed;
    if (variable == ScanVariable::kWellSeparation) {
      p.A = values[i];
    } else {
      p.F = opt.field_in_units ? values[i] * field_unit(p.A) : values[i];
    }
    try {
      p.validate();
      // Field scans use the fixed-A grid so that eigenvectors are comparable.
      const SpatialGrid grid = double_well_grid(p.A, opt.n_points);
      auto r = double_well_spectrum(p, grid, opt.k);
      pt.row.energies = std::move(r.eigenvalues);
      if (opt.keep_vectors) pt.vecs = std::move(r.eigenvectors);
      pt.grid = grid;
    } catch (const Error& e) {
      pt.row.energies.assign(opt.k, NAN);
      pt.row.flags = std::string("solver_failure: ") + e.what();
    }
    return pt;
  });

  SpectrumScan scan;
  scan.variable = variable;
  for (auto& pt : points) {
    scan.rows.push_back(std::move(pt.row));
    if (opt.keep_vectors) scan.vectors.push_back(std::move(pt.vecs));
    scan.grids.push_back(pt.grid.value_or(double_well_grid(fixed.A, opt.n_points)));
  }
  return scan;
}

// Follows levels across a scan: at each step, level j continues along the
// eigenvector with maximal overlap with its predecessor. Requires the scan
// to have been run with keep_vectors and a common grid.
// Returns tracked[j][row] energies.
inline std::vector<std::vector<double>> track_levels(const SpectrumScan& scan) {
  if (scan.vectors.size() != scan.rows.size())
    throw ConfigError("level tracking needs a scan run with keep_vectors");
  const std::size_t k = scan.rows.front().energies.size();
  std::vector<std::vector<double>> tracked(k, std::vector<double>(scan.rows.size(), NAN));
  std::vector<std::size_t> current(k);
  for (std::size_t j = 0; j < k; ++j) {
    current[j] = j;
    tracked[j][0] = scan.rows[0].energies[j];
  }
  for (std::size_t r = 1; r < scan.rows.size(); ++r) {
    if (!(scan.grids[r] == scan.grids[r - 1]))
      throw ConfigError("level tracking requires a common grid across the scan");
    const auto& prev = scan.vectors[r - 1];
    const auto& next = scan.vectors[r];
    std::vector<bool> used(k, false);
    std::vector<std::size_t> assign(k);
    for (std::size_t j = 0; j < k; ++j) {
      double best = -1.0;
      std::size_t best_idx = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (used[c]) continue;
        const double ov = std::abs(detail::dot(prev[current[j]], next[c]));
        if (ov > best) {
          best = ov;
          best_idx = c;
        }
      }
      used[best_idx] = true;
      assign[j] = best_idx;
    }
    for (std::size_t j = 0; j < k; ++j) {
      current[j] = assign[j];
      tracked[j][r] = scan.rows[r].energies[assign[j]];
    }
  }
  return tracked;
}

}  // namespace nemsq
