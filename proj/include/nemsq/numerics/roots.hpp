#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "nemsq/error.hpp"

namespace nemsq {

struct RootResult {
  double x;
  double fx;
  int evaluations;
};

// Bisection on a sign change of f over [lo, hi]; stops when the bracket is
// narrower than tol.
template <class F>
RootResult bisect(F&& f, double lo, double hi, double tol, double f_lo, double f_hi) {
  if (f_lo == 0.0) return {lo, f_lo, 0};
  if (f_hi == 0.0) return {hi, f_hi, 0};
  if ((f_lo > 0.0) == (f_hi > 0.0)) throw CalibrationError("bisection requires a sign change");
  int evals = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    ++evals;
    if (fm == 0.0) return {mid, fm, evals};
    if ((fm > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
  }
  // Report the endpoint with the smaller residual.
  return std::abs(f_lo) <= std::abs(f_hi) ? RootResult{lo, f_lo, evals}
                                          : RootResult{hi, f_hi, evals};
}

template <class F>
RootResult bisect(F&& f, double lo, double hi, double tol) {
  const double flo = f(lo);
  const double fhi = f(hi);
  auto r = bisect(f, lo, hi, tol, flo, fhi);
  r.evaluations += 2;
  return r;
}

// Golden-section minimization on [lo, hi] down to a bracket of width tol.
template <class F>
RootResult golden_section(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
    ++evals;
  }
  return fc < fd ? RootResult{c, fc, evals} : RootResult{d, fd, evals};
}

}  // namespace nemsq
