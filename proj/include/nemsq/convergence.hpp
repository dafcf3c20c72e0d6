#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "nemsq/double_well.hpp"
#include "nemsq/error.hpp"
#include "nemsq/numerics/observe.hpp"
#include "nemsq/numerics/propagate.hpp"

namespace nemsq {

// Successive-difference ratios d_i / d_{i+1} for a sequence of results at
// halved resolution; second-order schemes give ratios near 4.
inline std::vector<double> difference_ratios(const std::vector<double>& diffs) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < diffs.size(); ++i) out.push_back(diffs[i] / diffs[i + 1]);
  return out;
}

struct GridConvergence {
  std::vector<std::size_t> n_points;
  std::vector<double> spacing;
  std::vector<std::vector<double>> energies;  // [resolution][level]
  std::vector<std::vector<double>> ratios;    // [level][pair]
};

// Grids must halve the spacing on a fixed domain: n_{i+1} = 2 n_i - 1.
inline GridConvergence grid_convergence(double A, const std::vector<std::size_t>& n_points, std::size_t levels) {
  if (n_points.size() < 3) throw ConfigError("grid convergence needs at least three resolutions");
  for (std::size_t i = 0; i + 1 < n_points.size(); ++i)
    if (n_points[i + 1] != 2 * n_points[i] - 1)
      throw ConfigError("grid convergence resolutions must satisfy n_{i+1} = 2 n_i - 1");
  GridConvergence g;
  g.n_points = n_points;
  for (std::size_t n : n_points) {
    const SpatialGrid grid = double_well_grid(A, n);
    g.spacing.push_back(grid.spacing());
    g.energies.push_back(double_well_spectrum({A, 0.0}, grid, levels).eigenvalues);
  }
  g.ratios.resize(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<double> diffs;
    for (std::size_t i = 0; i + 1 < n_points.size(); ++i)
      diffs.push_back(std::abs(g.energies[i][l] - g.energies[i + 1][l]));
    g.ratios[l] = difference_ratios(diffs);
  }
  return g;
}

struct TimeStepConvergence {
  std::vector<double> dt;
  std::vector<Complex> probe;  // psi(+A, t_end)
  std::vector<double> magnitude;
  std::vector<double> phase;
  std::vector<double> ratios;  // on |probe_i - probe_{i+1}|
  std::vector<double> norm_drift;
};

// psi_+ released in the static double well; its probe amplitude at +A is a
// non-trivial function of time because the Gaussian is not an eigenstate.
inline TimeStepConvergence time_step_convergence(double A, const std::vector<double>& dts, double t_end,
                                                 std::size_t n_points) {
  if (dts.size() < 3) throw ConfigError("time-step convergence needs at least three steps");
  for (std::size_t i = 0; i + 1 < dts.size(); ++i)
    if (std::abs(dts[i + 1] - 0.5 * dts[i]) > 1e-15 * dts[i])
      throw ConfigError("time steps must halve successively");
  const SpatialGrid grid = double_well_grid(A, n_points);
  const WavefunctionState psi0 = gaussian_state({A, 0.0}, Side::kPlus, grid);
  const DoubleWellParams p{A, 0.0};
  TimeStepConvergence c;
  for (double dt : dts) {
    PropagationOptions opt;
    opt.dt = dt;
    const auto out = propagate(psi0, [&p](double x, double) { return potential_value(p, x); }, t_end, opt);
    c.dt.push_back(dt);
    c.probe.push_back(interpolate(out, A));
    const auto o = observe(out, A);
    c.magnitude.push_back(o.magnitude);
    c.phase.push_back(o.phase);
    c.norm_drift.push_back(std::abs(out.norm_squared() - psi0.norm_squared()));
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i + 1 < c.probe.size(); ++i) diffs.push_back(std::abs(c.probe[i] - c.probe[i + 1]));
  c.ratios = difference_ratios(diffs);
  return c;
}

}  // namespace nemsq
