#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nemsq/error.hpp"
#include "nemsq/numerics/quadrature.hpp"
#include "nemsq/numerics/roots.hpp"

namespace nemsq::mechanics {

inline constexpr double kHbar = 1.054571817e-34;  // J s

enum class Boundary { kFixed, kFree };

// Plate of natural length 2 L0 held between supports at y = +-y0.
struct PlateGeometry {
  double L0;
  double y0;
  double kappa;
  Boundary boundary = Boundary::kFixed;

  void validate() const {
    if (!(std::isfinite(L0) && std::isfinite(y0) && std::isfinite(kappa)))
      throw ConfigError("plate geometry must be finite");
    if (!(y0 > 0.0 && y0 < L0)) throw ConfigError("plate geometry requires 0 < y0 < L0");
    if (!(kappa > 0.0)) throw ConfigError("spring constant kappa must be positive");
  }
};

// Lowest buckling mode w(y) for an amplitude x0.
class BuckledProfile {
 public:
  BuckledProfile(Boundary b, double y0, double x0) : boundary_(b), y0_(y0), x0_(x0) {}

  double operator()(double y) const {
    if (boundary_ == Boundary::kFixed) return 0.5 * x0_ * (1.0 + std::cos(std::numbers::pi * y / y0_));
    return x0_ * std::cos(std::numbers::pi * y / (2.0 * y0_));
  }

  double slope(double y) const {
    if (boundary_ == Boundary::kFixed) {
      const double k = std::numbers::pi / y0_;
      return -0.5 * x0_ * k * std::sin(k * y);
    }
    const double k = std::numbers::pi / (2.0 * y0_);
    return -x0_ * k * std::sin(k * y);
  }

  double curvature(double y) const {
    if (boundary_ == Boundary::kFixed) {
      const double k = std::numbers::pi / y0_;
      return -0.5 * x0_ * k * k * std::cos(k * y);
    }
    const double k = std::numbers::pi / (2.0 * y0_);
    return -x0_ * k * k * std::cos(k * y);
  }

 private:
  Boundary boundary_;
  double y0_;
  double x0_;
};

inline void check_amplitude(const PlateGeometry& g, double x0) {
  if (!(std::abs(x0) < g.y0)) throw DomainError("buckling amplitude must satisfy |x0| < y0");
}

inline BuckledProfile buckled_profile(const PlateGeometry& g, double x0) {
  g.validate();
  check_amplitude(g, x0);
  return BuckledProfile(g.boundary, g.y0, x0);
}

// Full arc length between the supports,
//   L(x0) = (4 y0 / pi) int_0^{pi/2} sqrt(1 + c^2 sin^2 t) dt,  c = pi x0 / (2 y0).
// Both mode shapes give the same length.
inline double arc_length(const PlateGeometry& g, double x0) {
  g.validate();
  check_amplitude(g, x0);
  const double c = std::numbers::pi * x0 / (2.0 * g.y0);
  if (c == 0.0) return 2.0 * g.y0;
  const double c2 = c * c;
  const double integral = integrate(
      [c2](double t) {
        const double s = std::sin(t);
        return std::sqrt(1.0 + c2 * s * s);
      },
      0.0, 0.5 * std::numbers::pi, 1e-13);
  return 4.0 * g.y0 / std::numbers::pi * integral;
}

// Hooke energy of the stretched plate, (kappa/2) (L(x0) - 2 L0)^2; zero where
// the arc length matches the natural length 2 L0.
inline double hooke_potential(const PlateGeometry& g, double x0) {
  const double strain = arc_length(g, x0) - 2.0 * g.L0;
  return 0.5 * g.kappa * strain * strain;
}

struct QuarticFit {
  double lambda_fit;
  double a_fit;
  double V0;
  double max_residual;    // max |V - fit| over the fit window
  double barrier_height;  // V(0) - V(a_fit)
  double printed_lambda;
  double printed_a;
  double lambda_discrepancy;  // (printed_lambda - fit) / fit
  double a_discrepancy;
};

inline constexpr double kFitWindow = 1.2;
inline constexpr int kFitSamples = 241;

// Locates the buckled minimum by bisection on L(a) = 2 L0 and fits
// lambda (x0^2 - a^2)^2 + V0 to the Hooke potential by linear least squares.
inline QuarticFit quartic_fit(const PlateGeometry& g) {
  g.validate();
  const double hi = 0.99 * g.y0;
  const double target = 2.0 * g.L0;
  if (arc_length(g, hi) <= target)
    throw GeometryError("plate not compressed enough: no buckled minimum with |x0| < 0.99 y0");

  const auto root = bisect([&](double x) { return arc_length(g, x) - target; }, 0.0, hi,
                           1e-15 * g.y0);
  QuarticFit fit{};
  fit.a_fit = root.x;

  const double a = fit.a_fit;
  const double a2 = a * a;
  // Normal equations for V ~ lambda * f + V0 with f = (x^2 - a^2)^2. The
  // window must stay inside |x0| < y0.
  const double window = std::min(kFitWindow * a, 0.999 * g.y0);
  double sff = 0, sf = 0, s1 = 0, sfv = 0, sv = 0;
  std::vector<double> xs, vs, fs;
  for (int i = 0; i < kFitSamples; ++i) {
    const double x = -window + 2.0 * window * i / (kFitSamples - 1);
    const double f = (x * x - a2) * (x * x - a2);
    const double v = hooke_potential(g, x);
    xs.push_back(x);
    vs.push_back(v);
    fs.push_back(f);
    sff += f * f;
    sf += f;
    s1 += 1.0;
    sfv += f * v;
    sv += v;
  }
  const double det = sff * s1 - sf * sf;
  fit.lambda_fit = (sfv * s1 - sf * sv) / det;
  fit.V0 = (sff * sv - sf * sfv) / det;
  for (std::size_t i = 0; i < xs.size(); ++i)
    fit.max_residual = std::max(fit.max_residual, std::abs(vs[i] - (fit.lambda_fit * fs[i] + fit.V0)));
  fit.barrier_height = hooke_potential(g, 0.0) - hooke_potential(g, a);

  const double pi = std::numbers::pi;
  fit.printed_lambda = (g.L0 - 3.0 * g.y0) / (256.0 * g.y0 * g.y0 * g.y0) * g.kappa * pi * pi * pi * pi;
  fit.printed_a =
      g.y0 * 4.0 * std::numbers::sqrt2 / pi * std::sqrt((g.L0 - g.y0) / (3.0 * g.L0 - g.y0));
  fit.lambda_discrepancy = (fit.printed_lambda - fit.lambda_fit) / fit.lambda_fit;
  fit.a_discrepancy = (fit.printed_a - fit.a_fit) / fit.a_fit;
  return fit;
}

struct NaturalUnits {
  double t_u;
  double x_u;
  double omega_SI;  // NaN unless a well displacement was supplied
  double mass;
};

inline NaturalUnits natural_units(double mass, double lambda_SI, double a_SI = NAN) {
  if (!(mass > 0.0) || !(lambda_SI > 0.0))
    throw ConfigError("natural units require positive mass and lambda");
  NaturalUnits u;
  u.mass = mass;
  u.t_u = std::cbrt(mass * mass / (kHbar * lambda_SI));
  u.x_u = std::cbrt(kHbar) / std::pow(mass * lambda_SI, 1.0 / 6.0);
  u.omega_SI = std::isnan(a_SI) ? NAN : 2.0 * a_SI * std::sqrt(2.0 * lambda_SI / mass);
  return u;
}

struct MassAndLambda {
  double mass;
  double lambda_SI;
};

// Inverse of natural_units: m = hbar t_u / x_u^2, lambda = m^2 / (hbar t_u^3).
inline MassAndLambda from_natural_units(double t_u, double x_u) {
  const double m = kHbar * t_u / (x_u * x_u);
  return {m, m * m / (kHbar * t_u * t_u * t_u)};
}

// Displacement scales of order picometres (1 fm .. 10 pm) are treated as the
// quantum regime.
inline bool quantum_regime(const NaturalUnits& u) { return u.x_u >= 1e-15 && u.x_u <= 1e-11; }

// ---------------------------------------------------------------------------
// Feasibility against typical NEMS material ranges.

struct Band {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

inline constexpr Band kLengthBand{1e-6, 100e-6};        // m
inline constexpr Band kDisplacementBand{10e-15, 0.1e-12};  // m
inline constexpr Band kMassBand{1e-21, 1e-14};          // kg
inline constexpr Band kFrequencyBand{1e6, 1e9};         // Hz

struct FeasibilityRange {
  double lo;
  double hi;
};

struct FeasibilityInput {
  FeasibilityRange mass;    // kg
  FeasibilityRange length;  // total plate length 2 L0, m
  FeasibilityRange kappa;   // N/m
  int samples = 3;          // log-spaced samples per axis
  double compression = 0.9;  // y0 / L0
  Boundary boundary = Boundary::kFixed;
};

struct FeasibilityRow {
  double mass;
  double length;
  double kappa;
  double lambda_SI;
  double a_SI;
  double x_u;
  double t_u;
  double frequency;      // omega / 2 pi, Hz
  double frequency_spring;  // sqrt(kappa / m) / 2 pi, Hz
  bool length_ok;
  bool displacement_ok;
  bool mass_ok;
  bool frequency_ok;
  bool candidate;
};

inline std::vector<double> log_samples(const FeasibilityRange& r, int n) {
  if (!(r.lo > 0.0) || !(r.hi >= r.lo)) throw ConfigError("feasibility range must satisfy 0 < lo <= hi");
  if (n < 1) throw ConfigError("feasibility needs at least one sample per axis");
  std::vector<double> out;
  if (n == 1 || r.lo == r.hi) {
    out.push_back(std::sqrt(r.lo * r.hi));
    return out;
  }
  const double l0 = std::log(r.lo), l1 = std::log(r.hi);
  for (int i = 0; i < n; ++i) out.push_back(std::exp(l0 + (l1 - l0) * i / (n - 1)));
  return out;
}

inline FeasibilityRow assess(double mass, double length, double kappa, double compression,
                             Boundary boundary) {
  FeasibilityRow row{};
  row.mass = mass;
  row.length = length;
  row.kappa = kappa;
  const PlateGeometry g{0.5 * length, 0.5 * length * compression, kappa, boundary};
  const QuarticFit fit = quartic_fit(g);
  row.lambda_SI = fit.lambda_fit;
  row.a_SI = fit.a_fit;
  const NaturalUnits u = natural_units(mass, fit.lambda_fit, fit.a_fit);
  row.x_u = u.x_u;
  row.t_u = u.t_u;
  row.frequency = u.omega_SI / (2.0 * std::numbers::pi);
  row.frequency_spring = std::sqrt(kappa / mass) / (2.0 * std::numbers::pi);
  row.length_ok = kLengthBand.contains(length);
  row.displacement_ok = kDisplacementBand.contains(u.x_u);
  row.mass_ok = kMassBand.contains(mass);
  row.frequency_ok = kFrequencyBand.contains(row.frequency_spring);
  row.candidate = row.length_ok && row.displacement_ok && row.mass_ok && row.frequency_ok;
  return row;
}

inline std::vector<FeasibilityRow> feasibility_report(const FeasibilityInput& in) {
  if (!(in.compression > 0.0 && in.compression < 1.0))
    throw ConfigError("compression y0/L0 must lie in (0, 1)");
  std::vector<FeasibilityRow> rows;
  for (double m : log_samples(in.mass, in.samples))
    for (double len : log_samples(in.length, in.samples))
      for (double k : log_samples(in.kappa, in.samples))
        rows.push_back(assess(m, len, k, in.compression, in.boundary));
  return rows;
}

}  // namespace nemsq::mechanics
