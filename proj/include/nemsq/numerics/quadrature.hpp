#pragma once

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nemsq/error.hpp"

namespace nemsq {

// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b] to the given
// relative tolerance.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 30) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&f](double x) { return static_cast<double>(f(x)); }, a, b, max_depth, rel_tol, &error, &l1);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (!std::isfinite(value) || error > std::max(rel_tol * l1, 100.0 * eps * l1))
    throw ConvergenceError("adaptive quadrature did not reach the requested tolerance");
  return value;
}

}  // namespace nemsq
