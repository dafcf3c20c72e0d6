#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <type_traits>
#include <vector>

#include "nemsq/error.hpp"
#include "nemsq/numerics/wavefunction.hpp"

namespace nemsq {

inline constexpr double kDefaultTimeStep = 5e-4;

struct PropagationOptions {
  double dt = kDefaultTimeStep;
  // Observer is invoked every `stride` steps (0 disables sampling).
  std::size_t stride = 0;
  double max_norm_drift = 1e-8;
};

namespace detail {

// Accepts either V(x, t) or a factory t -> (x -> V). The factory form lets
// callers hoist per-time work (schedule evaluation) out of the node loop.
template <class P>
auto potential_at(P& p, double t) {
  if constexpr (std::is_invocable_r_v<double, P&, double, double>) {
    return [&p, t](double x) { return static_cast<double>(p(x, t)); };
  } else {
    return p(t);
  }
}

struct NoObserver {
  void operator()(const WavefunctionState&) const {}
};

}  // namespace detail

// Crank-Nicolson propagation of i d/dt psi = (-1/2 d^2/dx^2 + V(x,t)) psi
// with the potential sampled at the half step. The last step is shortened so
// the run lands exactly on t_end.
template <class Potential, class Observer = detail::NoObserver>
WavefunctionState propagate(WavefunctionState state, Potential&& potential, double t_end,
                            const PropagationOptions& opt = {}, Observer&& observer = {}) {
  if (!(opt.dt > 0.0) || !std::isfinite(opt.dt)) throw ConfigError("time step must be positive");
  const double t0 = state.time();
  if (!(t_end > t0)) throw ConfigError("propagation requires t_end > current time");

  const SpatialGrid& grid = state.grid();
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const std::size_t steps =
      static_cast<std::size_t>(std::ceil((t_end - t0) / opt.dt - 1e-9));
  const double dt = (t_end - t0) / static_cast<double>(steps);
  const double a = 0.5 * dt;
  const double kinetic = 1.0 / (h * h);
  const double off = -0.5 * kinetic;
  // Constant off-diagonal of (I + i a H) and (I - i a H).
  const double coff = a * off;  // imaginary part of the off-diagonal
  const double norm0 = state.norm_squared();

  std::vector<double> xs = grid.nodes();
  std::vector<double> re(n), im(n), cre(n), cim(n), dre(n), dim(n);
  std::vector<double> diag(n), prev_diag(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> inv_re(n), inv_im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = state[i].real();
    im[i] = state[i].imag();
  }

  for (std::size_t step = 0; step < steps; ++step) {
    const double t_mid = t0 + (static_cast<double>(step) + 0.5) * dt;
    {
      auto v_at = detail::potential_at(potential, t_mid);
      for (std::size_t i = 0; i < n; ++i) diag[i] = kinetic + v_at(xs[i]);
    }

    // Thomas factorization of (I + i a H); it depends only on the potential,
    // so it is reused while the potential is unchanged.
    if (diag != prev_diag) {
      double prev_cr = 0.0, prev_ci = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        // denom = (1 + i a d_i) - c c'_{i-1}, with c = i coff
        double den_r = 1.0, den_i = a * diag[i];
        if (i > 0) {
          den_r += coff * prev_ci;
          den_i -= coff * prev_cr;
        }
        const double inv = 1.0 / (den_r * den_r + den_i * den_i);
        inv_re[i] = den_r * inv;
        inv_im[i] = -den_i * inv;
        // c' = c / denom
        prev_cr = cre[i] = -coff * inv_im[i];
        prev_ci = cim[i] = coff * inv_re[i];
      }
      prev_diag = diag;
    }

    // Right-hand side b = (I - i a H) psi, then the forward sweep for d'.
    double prev_dr = 0.0, prev_di = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nbr_r = 0.0, nbr_i = 0.0;
      if (i > 0) {
        nbr_r += re[i - 1];
        nbr_i += im[i - 1];
      }
      if (i + 1 < n) {
        nbr_r += re[i + 1];
        nbr_i += im[i + 1];
      }
      const double hr = diag[i] * re[i] + off * nbr_r;
      const double hi = diag[i] * im[i] + off * nbr_i;
      // b - c d'_{i-1}
      const double br = re[i] + a * hi + coff * prev_di;
      const double bi = im[i] - a * hr - coff * prev_dr;
      prev_dr = dre[i] = br * inv_re[i] - bi * inv_im[i];
      prev_di = dim[i] = br * inv_im[i] + bi * inv_re[i];
    }
    // Back substitution: psi_i = d'_i - c'_i psi_{i+1}. The forward sweep read
    // psi_{i+1} before it is overwritten here, so in-place storage is safe.
    re[n - 1] = dre[n - 1];
    im[n - 1] = dim[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
      const double pr = re[k + 1], pi = im[k + 1];
      re[k] = dre[k] - (cre[k] * pr - cim[k] * pi);
      im[k] = dim[k] - (cre[k] * pi + cim[k] * pr);
    }

    if (opt.stride > 0 && (step + 1) % opt.stride == 0) {
      for (std::size_t i = 0; i < n; ++i) state[i] = Complex(re[i], im[i]);
      state.set_time(step + 1 == steps ? t_end : t0 + static_cast<double>(step + 1) * dt);
      observer(static_cast<const WavefunctionState&>(state));
    }
  }

  for (std::size_t i = 0; i < n; ++i) state[i] = Complex(re[i], im[i]);
  state.set_time(t_end);
  const double drift = std::abs(state.norm_squared() - norm0);
  if (!(drift <= opt.max_norm_drift)) {
    std::ostringstream msg;
    msg << "norm drift " << drift << " exceeds " << opt.max_norm_drift
        << "; reduce the time step (dt = " << dt << ")";
    throw InstabilityError(msg.str());
  }
  return state;
}

}  // namespace nemsq
