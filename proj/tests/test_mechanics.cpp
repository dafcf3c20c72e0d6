#include <cmath>
#include <numbers>

#include <boost/math/special_functions/ellint_2.hpp>
#include <gtest/gtest.h>

#include "nemsq/mechanics.hpp"

using namespace nemsq;
using namespace nemsq::mechanics;

namespace {

// Arc length of the fixed-end mode via the complete elliptic integral with
// imaginary modulus, E(ik) = sqrt(1 + k^2) E(k / sqrt(1 + k^2)).
double arc_length_oracle(double y0, double x0) {
  const double k = std::numbers::pi * x0 / (2.0 * y0);
  const double s = std::sqrt(1.0 + k * k);
  return 4.0 * y0 / std::numbers::pi * s * boost::math::ellint_2(k / s);
}

}  // namespace

TEST(Mechanics, ArcLengthAtZeroIsSpan) {
  const PlateGeometry g{1.0, 0.9, 1.0};
  EXPECT_EQ(arc_length(g, 0.0), 2.0 * g.y0);
}

TEST(Mechanics, ArcLengthMatchesEllipticOracle) {
  const PlateGeometry g{1.0, 0.9, 1.0};
  for (double x0 : {0.01, 0.1, 0.3, 0.6, 0.85}) EXPECT_NEAR(arc_length(g, x0), arc_length_oracle(g.y0, x0), 1e-12);
}

TEST(Mechanics, ArcLengthIsEvenAndIncreasing) {
  const PlateGeometry g{1.0, 0.9, 1.0, Boundary::kFree};
  double prev = arc_length(g, 0.0);
  for (int i = 1; i <= 20; ++i) {
    const double x = 0.04 * i;
    const double L = arc_length(g, x);
    EXPECT_GT(L, prev);
    EXPECT_DOUBLE_EQ(L, arc_length(g, -x));
    EXPECT_GE(L, 2.0 * g.y0);
    prev = L;
  }
}

TEST(Mechanics, SmallAmplitudeSeriesIsFourthOrder) {
  // Fixed ends: L = 2 y0 + pi^2 x0^2 / (8 y0) + O(x0^4).
  const PlateGeometry g{1.0, 0.9, 1.0};
  auto err = [&](double x0) {
    return std::abs(arc_length(g, x0) - (2.0 * g.y0 + std::numbers::pi * std::numbers::pi * x0 * x0 / (8.0 * g.y0)));
  };
  const double r = err(0.02) / err(0.01);
  EXPECT_NEAR(r, 16.0, 0.5);
}

TEST(Mechanics, QuarticFitMinimaAndReport) {
  for (Boundary b : {Boundary::kFixed, Boundary::kFree}) {
    const PlateGeometry g{1.0, 0.9, 1.0, b};
    const auto fit = quartic_fit(g);
    EXPECT_NEAR(hooke_potential(g, fit.a_fit), 0.0, 1e-20);
    EXPECT_NEAR(arc_length(g, fit.a_fit), 2.0 * g.L0, 1e-13);
    EXPECT_GT(fit.lambda_fit, 0.0);
    EXPECT_GT(fit.barrier_height, 0.0);
    EXPECT_TRUE(std::isfinite(fit.lambda_discrepancy));
    EXPECT_TRUE(std::isfinite(fit.a_discrepancy));
  }
}

TEST(Mechanics, QuarticFitResidualVanishesNearUnbuckled) {
  // Leading correction to L is quartic in x0, so the relative residual scales
  // like (a / y0)^2 and vanishes as y0 -> L0.
  double prev = INFINITY;
  for (double y0 : {0.9, 0.95, 0.99, 0.999}) {
    const auto fit = quartic_fit({1.0, y0, 1.0});
    const double rel = fit.max_residual / fit.barrier_height;
    EXPECT_LT(rel, prev);
    prev = rel;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Mechanics, UnbuckledLimit) {
  double prev = INFINITY;
  for (double y0 : {0.9, 0.99, 0.999, 0.9999}) {
    const auto fit = quartic_fit({1.0, y0, 1.0});
    EXPECT_LT(fit.a_fit, prev);
    prev = fit.a_fit;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(Mechanics, InsufficientCompression) {
  // The largest reachable length 2 L0 needs |x0| > 0.99 y0 here.
  EXPECT_THROW(quartic_fit({10.0, 0.5, 1.0}), GeometryError);
  EXPECT_THROW(PlateGeometry({1.0, 1.2, 1.0}).validate(), ConfigError);
}

TEST(Mechanics, NaturalUnitScaling) {
  const auto u1 = natural_units(1e-18, 1e10);
  EXPECT_NEAR(natural_units(2e-18, 1e10).t_u / u1.t_u, std::pow(2.0, 2.0 / 3.0), 1e-12);
  EXPECT_NEAR(natural_units(1e-18, 2e10).x_u / u1.x_u, std::pow(2.0, -1.0 / 6.0), 1e-12);
  const auto back = from_natural_units(u1.t_u, u1.x_u);
  EXPECT_NEAR(back.mass / 1e-18, 1.0, 1e-12);
  EXPECT_NEAR(back.lambda_SI / 1e10, 1.0, 1e-12);
  EXPECT_THROW(natural_units(0.0, 1.0), ConfigError);
}

TEST(Mechanics, RepresentativeNemsIsQuantum) {
  // m = 1e-18 kg with lambda chosen so that x_u is a picometre.
  const double m = 1e-18, xu = 1e-12;
  const double lambda = std::pow(kHbar, 2.0) / (m * std::pow(xu, 6.0));
  const auto u = natural_units(m, lambda);
  EXPECT_NEAR(u.x_u, xu, 1e-24);
  EXPECT_TRUE(quantum_regime(u));
  EXPECT_FALSE(quantum_regime(natural_units(m, lambda * 1e30)));
}

TEST(Mechanics, FeasibilityFlags) {
  EXPECT_TRUE(kMassBand.contains(1e-14));
  EXPECT_FALSE(kFrequencyBand.contains(1e4));
  FeasibilityInput in{{1e-18, 1e-18}, {1e-5, 1e-5}, {1.0, 1.0}, 1};
  const auto rows = feasibility_report(in);
  ASSERT_EQ(rows.size(), 1u);
  const auto& r = rows[0];
  EXPECT_TRUE(r.mass_ok);
  EXPECT_TRUE(r.length_ok);
  EXPECT_EQ(r.candidate, r.length_ok && r.mass_ok && r.displacement_ok && r.frequency_ok);
  FeasibilityInput slow{{1e-14, 1e-14}, {1e-5, 1e-5}, {1e-5, 1e-5}, 1};
  EXPECT_FALSE(feasibility_report(slow)[0].frequency_ok);
  EXPECT_EQ(feasibility_report({{1e-20, 1e-15}, {1e-6, 1e-4}, {0.1, 10.0}, 3}).size(), 27u);
}
