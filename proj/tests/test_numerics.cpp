#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "nemsq/double_well.hpp"
#include "nemsq/numerics/eigensolve.hpp"
#include "nemsq/numerics/grid.hpp"
#include "nemsq/numerics/observe.hpp"
#include "nemsq/numerics/propagate.hpp"
#include "nemsq/numerics/quadrature.hpp"
#include "nemsq/numerics/roots.hpp"
#include "nemsq/numerics/tridiagonal.hpp"
#include "nemsq/parallel.hpp"

using namespace nemsq;

namespace {

Eigen::VectorXd dense_eigenvalues(const TridiagonalOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = op.diagonal[i];
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = op.off_diagonal[i];
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
}

double quartic(double x) { return x * x * x * x; }

}  // namespace

TEST(Grid, SpacingArithmetic) {
  EXPECT_DOUBLE_EQ(build_grid(-8, 8, 1025).spacing(), 0.015625);
  EXPECT_DOUBLE_EQ(build_grid(-12, 12, 2049).spacing(), 0.01171875);
  EXPECT_TRUE(build_grid(-12, 12, 2049).symmetric());
  EXPECT_FALSE(build_grid(-1, 2, 32).symmetric());
}

TEST(Grid, RejectsDegenerateInput) {
  EXPECT_THROW(build_grid(-8, 8, 2), ConfigError);
  EXPECT_THROW(build_grid(8, -8, 100), ConfigError);
  EXPECT_THROW(build_grid(-INFINITY, 8, 100), ConfigError);
}

TEST(Grid, DefaultDomainCoversWells) {
  EXPECT_DOUBLE_EQ(default_half_width(3.0), 8.0);
  EXPECT_DOUBLE_EQ(default_half_width(0.0), 8.0);
  const double A = 10.0, sigma = 1.0 / std::sqrt(2.0 * A * std::numbers::sqrt2);
  EXPECT_DOUBLE_EQ(default_half_width(A), A + 6.0 * sigma);
}

TEST(Hamiltonian, FreeParticleStencil) {
  const auto g = build_grid(-1, 1, 65);
  const auto op = discretize_hamiltonian(g, [](double) { return 0.0; });
  const double h = g.spacing();
  for (double d : op.diagonal) EXPECT_DOUBLE_EQ(d, 1.0 / (h * h));
  for (double o : op.off_diagonal) EXPECT_DOUBLE_EQ(o, -0.5 / (h * h));
}

TEST(Hamiltonian, PotentialZeroAtWellMinimum) {
  const auto g = build_grid(-8, 8, 1025);  // x = 3 is node 704
  const auto op = discretize_hamiltonian(g, [](double x) { return potential_value({3.0, 0.0}, x); });
  EXPECT_DOUBLE_EQ(g.x(704), 3.0);
  EXPECT_DOUBLE_EQ(op.diagonal[704], 1.0 / (g.spacing() * g.spacing()));
}

TEST(Hamiltonian, NonFinitePotentialNamesNode) {
  const auto g = build_grid(-1, 1, 33);
  try {
    discretize_hamiltonian(g, [](double x) { return x > 0.5 ? NAN : 0.0; });
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
}

TEST(Eigensolve, MatchesDenseOracleOn64Nodes) {
  const auto g = build_grid(-5, 5, 64);
  for (double A : {0.0, 1.0, 2.0}) {
    const auto op = discretize_hamiltonian(g, [A](double x) { return potential_value({A, 0.3}, x); });
    const auto dense = dense_eigenvalues(op);
    const auto r = eigensolve(op, 16);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(r.eigenvalues[i], dense[i], 1e-9) << "A=" << A << " i=" << i;
  }
}

TEST(Eigensolve, SymmetricOperatorMatchesDenseOracle) {
  const auto g = build_grid(-4, 4, 64);
  const auto op = discretize_hamiltonian(g, [](double x) { return potential_value({1.5, 0.0}, x); });
  const auto dense = dense_eigenvalues(op);
  EigenOptions plain;
  plain.symmetry = SymmetryMode::kNone;
  const auto a = eigensolve(op, 16);
  const auto b = eigensolve(op, 16, plain);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(a.eigenvalues[i], dense[i], 1e-9);
    EXPECT_NEAR(b.eigenvalues[i], dense[i], 1e-9);
  }
}

TEST(Eigensolve, HarmonicSpectrum) {
  const auto g = build_grid(-10, 10, 2049);
  const auto op = discretize_hamiltonian(g, [](double x) { return 0.5 * x * x; });
  const auto r = eigensolve(op, 3);
  EXPECT_NEAR(r.eigenvalues[0], 0.5, 1e-4);
  EXPECT_NEAR(r.eigenvalues[1], 1.5, 1e-4);
  EXPECT_NEAR(r.eigenvalues[2], 2.5, 1e-4);
}

TEST(Eigensolve, ResidualsAndOrthogonality) {
  const auto g = double_well_grid(3.0, 2049);
  const auto op = double_well_hamiltonian({3.0, 0.0}, g);
  const auto r = eigensolve(op, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto hv = op.apply(r.eigenvectors[i]);
    double res = 0.0;
    for (std::size_t j = 0; j < hv.size(); ++j) res += std::pow(hv[j] - r.eigenvalues[i] * r.eigenvectors[i][j], 2);
    EXPECT_LT(std::sqrt(res), 1e-8);
    for (std::size_t k = 0; k < i; ++k) EXPECT_LT(std::abs(detail::dot(r.eigenvectors[i], r.eigenvectors[k])), 1e-8);
    if (i > 0) {
      EXPECT_GE(r.eigenvalues[i], r.eigenvalues[i - 1]);
    }
  }
}

TEST(Eigensolve, QuarticGroundStateRichardson) {
  // Independent oracle: dense diagonalization at h and h/2 on [-8, 8] with
  // Richardson extrapolation of the second-order error.
  auto dense_ground = [](std::size_t n) {
    const auto g = build_grid(-8, 8, n);
    return dense_eigenvalues(discretize_hamiltonian(g, quartic))[0];
  };
  const double e1 = dense_ground(257), e2 = dense_ground(513);
  const double extrapolated = (4.0 * e2 - e1) / 3.0;
  const auto r = eigensolve(discretize_hamiltonian(build_grid(-8, 8, 1025), quartic), 1);
  EXPECT_NEAR(extrapolated, 0.667986, 2e-5);
  EXPECT_NEAR(r.eigenvalues[0], extrapolated, 1e-4);
}

TEST(Eigensolve, RejectsBadK) {
  const auto op = discretize_hamiltonian(build_grid(-1, 1, 64), [](double) { return 0.0; });
  EXPECT_THROW(eigensolve(op, 0), ConfigError);
  EXPECT_THROW(eigensolve(op, 17), ConfigError);
}

TEST(Propagate, StaticHarmonicGroundStateReturnsAfterOnePeriod) {
  const auto g = build_grid(-10, 10, 2049);
  const auto op = discretize_hamiltonian(g, [](double x) { return 0.5 * x * x; });
  const auto eig = eigensolve(op, 1);
  const auto psi0 = eigenstate_as_wavefunction(g, eig.eigenvectors[0]);
  const auto psi = propagate(psi0, [](double x, double) { return 0.5 * x * x; }, 2.0 * std::numbers::pi);
  EXPECT_NEAR(overlap(psi0, psi), 1.0, 1e-6);
  EXPECT_LT(std::abs(psi.norm_squared() - 1.0), 1e-10);
}

TEST(Propagate, StationaryPhaseIsMinusEt) {
  const auto g = double_well_grid(3.0, 2049);
  const DoubleWellParams p{3.0, 0.0};
  const auto eig = double_well_spectrum(p, g, 1);
  const auto psi0 = eigenstate_as_wavefunction(g, eig.eigenvectors[0]);
  const double t = 2.0;
  const auto psi = propagate(psi0, [&p](double x, double) { return potential_value(p, x); }, t);
  const double phase = std::arg(inner_product(psi0, psi));
  double expected = -eig.eigenvalues[0] * t;
  expected -= 2.0 * std::numbers::pi * std::round((expected - phase) / (2.0 * std::numbers::pi));
  EXPECT_NEAR(phase, expected, 1e-4);
}

TEST(Propagate, DeepDoubleWellMatchesSpectralEvolution) {
  // Oracle: expansion in 40 eigenstates of the same grid Hamiltonian, evolved
  // with exact phases. The left-well amplitude comes from the excited doublets,
  // whose splittings are far larger than the ground splitting.
  const auto g = double_well_grid(3.0, 2049);
  const DoubleWellParams p{3.0, 0.0};
  const auto psi0 = gaussian_state(p, Side::kPlus, g);
  const auto eig = double_well_spectrum(p, g, 40);
  const double rh = std::sqrt(g.spacing());
  std::vector<Complex> c(40);
  for (std::size_t k = 0; k < 40; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) c[k] += eig.eigenvectors[k][i] * psi0[i] * rh;
  auto nearest = [&g](double x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
      if (std::abs(g.x(i) - x) < std::abs(g.x(best) - x)) best = i;
    return best;
  };
  const std::size_t left = nearest(-3.0), right = nearest(3.0);
  auto spectral = [&](std::size_t node, double t) {
    Complex a{0.0, 0.0};
    for (std::size_t k = 0; k < 40; ++k)
      a += c[k] * std::exp(Complex(0.0, -eig.eigenvalues[k] * t)) * eig.eigenvectors[k][node] / rh;
    return a;
  };
  double max_left = 0.0, max_left_oracle = 0.0;
  PropagationOptions opt;
  opt.stride = 200;
  const auto psi = propagate(psi0, [&p](double x, double) { return potential_value(p, x); }, 10.0, opt,
                             [&](const WavefunctionState& s) {
                               max_left = std::max(max_left, std::abs(s[left]));
                               max_left_oracle = std::max(max_left_oracle, std::abs(spectral(left, s.time())));
                             });
  EXPECT_LT(max_left, 1e-4);
  EXPECT_NEAR(max_left / max_left_oracle, 1.0, 0.02);
  EXPECT_LT(std::abs(psi[right] - spectral(right, 10.0)), 1e-3);
  EXPECT_LT(std::abs(psi.norm_squared() - 1.0), 1e-10);
  EXPECT_DOUBLE_EQ(psi.time(), 10.0);
}

TEST(Propagate, ObserverStrideAndEndTime) {
  const auto g = build_grid(-5, 5, 129);
  const auto psi0 = gaussian_state({2.5, 0.0}, Side::kPlus, g);
  PropagationOptions opt;
  opt.dt = 0.01;
  opt.stride = 10;
  int calls = 0;
  const auto psi = propagate(psi0, [](double, double) { return 0.0; }, 1.0, opt, [&](const WavefunctionState&) { ++calls; });
  EXPECT_EQ(calls, 10);
  EXPECT_DOUBLE_EQ(psi.time(), 1.0);
  EXPECT_THROW(propagate(psi0, [](double, double) { return 0.0; }, 0.0), ConfigError);
}

TEST(Propagate, UnstablePotentialRaises) {
  const auto g = build_grid(-5, 5, 129);
  const auto psi0 = gaussian_state({2.5, 0.0}, Side::kPlus, g);
  PropagationOptions opt;
  opt.dt = 0.01;
  EXPECT_THROW(propagate(psi0, [](double, double) { return NAN; }, 0.1, opt), InstabilityError);
}

TEST(Observe, GaussianPeakAndTail) {
  const double A = 3.0;
  const auto g = double_well_grid(A, 2049);
  const auto psi = gaussian_state({A, 0.0}, Side::kPlus, g);
  EXPECT_NEAR(observe(psi, A).magnitude, std::pow(2.0 * A * std::numbers::sqrt2 / std::numbers::pi, 0.25), 1e-6);
  EXPECT_LT(observe(psi, -A).magnitude, 1e-6);
  EXPECT_THROW(observe(psi, 100.0), DomainError);
}

TEST(Observe, CubicInterpolationIsExactForCubics) {
  const auto g = build_grid(-1, 1, 33);
  std::vector<Complex> amps(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    amps[i] = Complex(x * x * x - x, 2.0 * x * x);
  }
  const WavefunctionState s(g, amps);
  for (double x : {-0.99, -0.3, 0.01, 0.77, 1.0}) {
    const Complex z = interpolate(s, x);
    EXPECT_NEAR(z.real(), x * x * x - x, 1e-13);
    EXPECT_NEAR(z.imag(), 2.0 * x * x, 1e-13);
  }
  EXPECT_GE(observe(s, -0.5).phase, 0.0);
  EXPECT_LT(observe(s, -0.5).phase, 2.0 * std::numbers::pi);
}

TEST(Roots, BisectionAndGoldenSection) {
  const auto r = bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-12);
  EXPECT_NEAR(r.x, std::numbers::sqrt2, 1e-12);
  EXPECT_THROW(bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0, 1e-6), CalibrationError);
  const auto m = golden_section([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0, 1e-8);
  EXPECT_NEAR(m.x, 0.3, 1e-8);
}

TEST(Quadrature, KnownIntegrals) {
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-13);
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0), std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_NEAR(integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-6), 2.0 / 3.0, 1e-10);
  EXPECT_THROW(integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-14, 3), ConvergenceError);
}

TEST(Parallel, OrderedResultsAndExceptions) {
  const auto v = parallel_map(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
  EXPECT_THROW(parallel_map(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                              return 0;
                            }),
               std::runtime_error);
}

TEST(Wavefunction, NormAndMirror) {
  const auto g = build_grid(-4, 4, 257);
  const auto psi = gaussian_state({2.5, 0.0}, Side::kPlus, g);
  EXPECT_NEAR(psi.norm_squared(), 1.0, 1e-14);
  const auto m = psi.mirrored();
  const auto minus = gaussian_state({2.5, 0.0}, Side::kMinus, g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(m[i] - minus[i]), 0.0, 1e-14);
  EXPECT_THROW(WavefunctionState(g, std::vector<Complex>(3)), ConfigError);
}
