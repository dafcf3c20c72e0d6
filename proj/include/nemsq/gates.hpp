#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nemsq/control.hpp"
#include "nemsq/error.hpp"
#include "nemsq/numerics/wavefunction.hpp"

namespace nemsq {

using GateMatrix = Eigen::MatrixXcd;

namespace gate_detail {

inline const Complex kI{0.0, 1.0};

inline GateMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  GateMatrix m(n, n);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (const auto& v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline GateMatrix diag(std::initializer_list<Complex> d) {
  GateMatrix m = GateMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (const auto& v : d) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

}  // namespace gate_detail

inline GateMatrix pauli_x() { return gate_detail::from_rows({{0, 1}, {1, 0}}); }
inline GateMatrix pauli_z() { return gate_detail::diag({1, -1}); }
inline GateMatrix identity(int dim = 2) { return GateMatrix::Identity(dim, dim); }

// exp(-i theta sigma_z / 2)
inline GateMatrix z_rotation(double theta) {
  return gate_detail::diag({std::polar(1.0, -0.5 * theta), std::polar(1.0, 0.5 * theta)});
}

// (e^{i pi/4} I +- e^{-i pi/4} sigma_x) / sqrt 2
inline GateMatrix sqrt_not(int sign) {
  const double s = sign >= 0 ? 1.0 : -1.0;
  return (std::polar(1.0, std::numbers::pi / 4) * identity() +
          s * std::polar(1.0, -std::numbers::pi / 4) * pauli_x()) /
         std::numbers::sqrt2;
}

inline GateMatrix hadamard() { return (pauli_z() + pauli_x()) / std::numbers::sqrt2; }

// exp(-i phi/2 Z (x) Z)
inline GateMatrix zz_rotation(double phi) {
  const Complex a = std::polar(1.0, -0.5 * phi), b = std::polar(1.0, 0.5 * phi);
  return gate_detail::diag({a, b, b, a});
}

inline GateMatrix kron(const GateMatrix& a, const GateMatrix& b) {
  GateMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Single-qubit gate acting on qubit 1 or 2 of a two-qubit register.
inline GateMatrix lift(const GateMatrix& g, int qubit) {
  if (g.rows() != 2) throw DomainError("only single-qubit gates can be lifted");
  if (qubit == 1) return kron(g, identity());
  if (qubit == 2) return kron(identity(), g);
  throw DomainError("qubit index must be 1 or 2");
}

// e^{-i U0 t} diag(1, e^{-i (E(+-) - U0) t}, e^{-i (E(-+) - U0) t}, 1) on
// (|++>, |+->, |-+>, |-->), with E(+-) = U0 - EX and E(-+) = U0 + EX.
inline GateMatrix two_qubit_phase_gate(double EX, double t, double U0 = 0.0) {
  return std::polar(1.0, -U0 * t) *
         gate_detail::diag({1.0, std::polar(1.0, EX * t), std::polar(1.0, -EX * t), 1.0});
}

inline GateMatrix ising_gate() { return gate_detail::diag({1, -1, -1, 1}); }
inline GateMatrix cz_gate() { return gate_detail::diag({1, 1, 1, -1}); }
inline GateMatrix cnot_gate() {
  return gate_detail::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}});
}

// Gate names: I, X (or NOT), Z, SQRT_NOT+, SQRT_NOT-, UZ, T, H, ZZ, CZ, CNOT,
// PHASE2 (two-qubit phase gate; angle = EX t).
inline GateMatrix ideal_gate(std::string_view name, std::optional<double> angle = std::nullopt) {
  auto need_angle = [&]() {
    if (!angle) throw ConfigError("gate '" + std::string(name) + "' requires an angle");
    return *angle;
  };
  if (name == "I") return identity();
  if (name == "X" || name == "NOT") return pauli_x();
  if (name == "Z") return pauli_z();
  if (name == "SQRT_NOT+") return sqrt_not(+1);
  if (name == "SQRT_NOT-") return sqrt_not(-1);
  if (name == "UZ") return z_rotation(need_angle());
  if (name == "T") return gate_detail::diag({1, std::polar(1.0, std::numbers::pi / 4)});
  if (name == "H") return hadamard();
  if (name == "ZZ") return ising_gate();
  if (name == "CZ") return cz_gate();
  if (name == "CNOT") return cnot_gate();
  if (name == "PHASE2") return two_qubit_phase_gate(1.0, need_angle());
  throw ConfigError("unknown gate '" + std::string(name) + "'");
}

// |tr(U^dagger V)| / dim
inline double fidelity(const GateMatrix& u, const GateMatrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw DomainError("fidelity of gates with different dimensions");
  return std::abs((u.adjoint() * v).trace()) / static_cast<double>(u.rows());
}

inline double unitarity_error(const GateMatrix& u) {
  return (u.adjoint() * u - GateMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

// Maximum entrywise distance after removing the best global phase.
inline double distance_up_to_phase(const GateMatrix& u, const GateMatrix& v) {
  const Complex tr = (u.adjoint() * v).trace();
  const Complex phase = std::abs(tr) > 0.0 ? tr / std::abs(tr) : Complex{1.0, 0.0};
  return (u * phase - v).cwiseAbs().maxCoeff();
}

// A placement of 0 means the gate acts on the whole register.
struct PlacedGate {
  GateMatrix gate;
  int qubit = 0;
};

// Product in application order: the first gate in the sequence acts first.
inline GateMatrix compose(const std::vector<PlacedGate>& seq, int dim) {
  if (dim != 2 && dim != 4) throw DomainError("register dimension must be 2 or 4");
  GateMatrix out = GateMatrix::Identity(dim, dim);
  for (const auto& g : seq) {
    GateMatrix full;
    if (g.qubit == 0) {
      full = g.gate;
    } else {
      if (dim != 4) throw DomainError("qubit placement requires a two-qubit register");
      full = lift(g.gate, g.qubit);
    }
    if (full.rows() != dim || full.cols() != dim)
      throw DomainError("placed gate does not match the register dimension");
    out = full * out;
  }
  return out;
}

// Hadamard as a z-x-z sequence: e^{i pi/4} U_Z(pi/2) U_sqrtNOT^+ U_Z(pi/2).
inline GateMatrix hadamard_zxz() {
  return std::polar(1.0, std::numbers::pi / 4) *
         compose({{z_rotation(std::numbers::pi / 2)}, {sqrt_not(+1)}, {z_rotation(std::numbers::pi / 2)}}, 2);
}

// -i Z X Z with Pauli Z, the literal z-x-z form next to the Hadamard
// definition; it evaluates to i sigma_x.
inline GateMatrix hadamard_literal() {
  return -gate_detail::kI * compose({{pauli_z()}, {pauli_x()}, {pauli_z()}}, 2);
}

// CZ = e^{i pi/4} (U_Z(phi1) (x) U_Z(phi2)) exp(-i phi_zz/2 Z (x) Z).
struct CzAngles {
  double phi1;
  double phi2;
  double phi_zz;
};

inline constexpr CzAngles kCzAngles{std::numbers::pi / 2, std::numbers::pi / 2, -std::numbers::pi / 2};

inline GateMatrix cz_from_angles(const CzAngles& a) {
  return std::polar(1.0, std::numbers::pi / 4) *
         compose({{zz_rotation(a.phi_zz)}, {z_rotation(a.phi1), 1}, {z_rotation(a.phi2), 2}}, 4);
}

// Exhaustive search over {+-pi/2, +-pi/4}^3 for angle triples that give CZ.
inline std::vector<CzAngles> search_cz_angles(double tol = 1e-12) {
  const std::array<double, 4> cand{std::numbers::pi / 2, -std::numbers::pi / 2, std::numbers::pi / 4,
                                   -std::numbers::pi / 4};
  std::vector<CzAngles> hits;
  for (double p1 : cand)
    for (double p2 : cand)
      for (double pz : cand)
        if (1.0 - fidelity(cz_from_angles({p1, p2, pz}), cz_gate()) < tol) hits.push_back({p1, p2, pz});
  return hits;
}

inline GateMatrix cnot_from_cz() {
  return compose({{hadamard(), 2}, {cz_gate()}, {hadamard(), 2}}, 4);
}

// ---------------------------------------------------------------------------
// Reconstruction from protocol runs

struct QubitBasis {
  WavefunctionState psi_plus;
  WavefunctionState psi_minus;
};

inline QubitBasis qubit_basis(double A, const SpatialGrid& grid) {
  return {gaussian_state({A, 0.0}, Side::kPlus, grid), gaussian_state({A, 0.0}, Side::kMinus, grid)};
}

inline constexpr double kLeakageThreshold = 0.05;

struct ReconstructedGate {
  GateMatrix matrix;
  std::array<double, 2> leakage;
  bool reliable;
};

// Column j holds the projections of the run started in basis state j.
inline ReconstructedGate reconstruct_gate(const WavefunctionState& out_plus,
                                          const WavefunctionState& out_minus, const QubitBasis& basis) {
  if (!(out_plus.grid() == out_minus.grid()) || !(out_plus.grid() == basis.psi_plus.grid()))
    throw DomainError("reconstruction requires runs and basis on a shared grid");
  if (out_plus.time() != out_minus.time()) throw DomainError("reconstruction requires a shared t3");
  ReconstructedGate g{GateMatrix(2, 2), {}, true};
  const WavefunctionState* outs[2] = {&out_plus, &out_minus};
  for (int j = 0; j < 2; ++j) {
    g.matrix(0, j) = inner_product(basis.psi_plus, *outs[j]);
    g.matrix(1, j) = inner_product(basis.psi_minus, *outs[j]);
    g.leakage[j] = 1.0 - g.matrix.col(j).squaredNorm();
    if (g.leakage[j] > kLeakageThreshold) g.reliable = false;
  }
  return g;
}

inline ReconstructedGate reconstruct_gate(const ProtocolResult& run_plus, const ProtocolResult& run_minus,
                                          const QubitBasis& basis) {
  return reconstruct_gate(run_plus.terminal_state, run_minus.terminal_state, basis);
}

}  // namespace nemsq
