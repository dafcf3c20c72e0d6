#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nemsq/double_well.hpp"
#include "nemsq/error.hpp"
#include "nemsq/numerics/grid.hpp"
#include "nemsq/numerics/propagate.hpp"
#include "nemsq/parallel.hpp"

namespace nemsq {

// Two plates coupled through a parallel-plate capacitor
// C = eps0S / (X_cap + x1 - x2), all in dimensionless units.
struct CouplingParams {
  double eps0S = 2.0;
  double X_cap = 10.0;
  double V1 = 10.0;
  double a = 2.0;

  // eps0S V1^2 / 2, the energy scale multiplying 1 / gap.
  double strength() const { return 0.5 * eps0S * V1 * V1; }

  void validate() const {
    if (!(std::isfinite(eps0S) && std::isfinite(X_cap) && std::isfinite(V1) && std::isfinite(a)))
      throw ConfigError("coupling parameters must be finite");
    if (!(eps0S > 0.0)) throw ConfigError("coupling eps0S must be > 0");
    if (!(V1 >= 0.0)) throw ConfigError("coupling V1 must be >= 0");
    if (!(a >= 0.0)) throw ConfigError("coupling a must be >= 0");
    if (!(X_cap > 2.0 * a)) throw ConfigError("coupling requires X_cap > 2a");
  }
};

struct DoubleWellPair {
  DoubleWellParams first;
  DoubleWellParams second;
};

inline DoubleWellPair matching_pair(const CouplingParams& p) { return {{p.a, 0.0}, {p.a, 0.0}}; }

inline double capacitive_energy(const CouplingParams& p, double x1, double x2) {
  const double gap = p.X_cap + x1 - x2;
  if (!(gap > 0.0)) throw DomainError("plate gap X_cap + x1 - x2 must stay positive");
  return p.strength() / gap;
}

inline double pair_potential(const CouplingParams& p, const DoubleWellPair& dw, double x1, double x2) {
  return potential_value(dw.first, x1) + potential_value(dw.second, x2) + capacitive_energy(p, x1, x2);
}

struct CornerEnergies {
  double U0;       // (a, a) and (-a, -a)
  double E_plus;   // (a, -a)
  double E_minus;  // (-a, a)
  double EX;       // first-order splitting a eps0S V1^2 / X_cap^2
  // |EX - |E - U0|| / |E - U0| for each branch
  double rel_error_plus;
  double rel_error_minus;
};

inline CornerEnergies corner_energies(const CouplingParams& p) {
  p.validate();
  const double c = p.strength();
  CornerEnergies e{};
  e.U0 = c / p.X_cap;
  e.E_plus = c / (p.X_cap + 2.0 * p.a);
  e.E_minus = c / (p.X_cap - 2.0 * p.a);
  e.EX = p.a * p.eps0S * p.V1 * p.V1 / (p.X_cap * p.X_cap);
  const double dp = e.U0 - e.E_plus, dm = e.E_minus - e.U0;
  e.rel_error_plus = dp > 0.0 ? std::abs(e.EX - dp) / dp : 0.0;
  e.rel_error_minus = dm > 0.0 ? std::abs(e.EX - dm) / dm : 0.0;
  return e;
}

inline double ising_gate_time(double EX) {
  if (!(EX > 0.0) || !std::isfinite(EX)) throw DomainError("Ising gate time requires EX > 0");
  return std::numbers::pi / EX;
}

// ---------------------------------------------------------------------------
// Landscape

struct Landscape {
  SpatialGrid grid;             // shared by both axes
  std::vector<double> values;   // row-major, values[i * n + j] = V(x_i, x_j)
  double at(std::size_t i, std::size_t j) const { return values[i * grid.size() + j]; }
};

struct LandscapeMinimum {
  int sigma1;  // sign of x1 at the well
  int sigma2;
  double grid_x1, grid_x2, grid_value;  // sampled argmin in the quadrant
  double x1, x2, value;                 // refined minimum
  double corner_value;                  // pair_potential at (sigma1 a, sigma2 a)
  double relaxation_bound;              // |grad|^2 / (2 lambda_min) at the corner
};

inline constexpr std::size_t kMaxLandscapeNodes = 512;

inline Landscape landscape_2d(const CouplingParams& p, const DoubleWellPair& dw, const SpatialGrid& grid) {
  p.validate();
  if (grid.size() > kMaxLandscapeNodes) throw ResourceError("landscape grid limited to 512 x 512 nodes");
  const std::size_t n = grid.size();
  Landscape L{grid, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double x1 = grid.x(i), x2 = grid.x(j);
      const double gap = p.X_cap + x1 - x2;
      L.values[i * n + j] = gap > 0.0 ? pair_potential(p, dw, x1, x2) : INFINITY;
    }
  return L;
}

namespace coupling_detail {

struct Derivs {
  double g1, g2, h11, h22, h12;
};

inline Derivs derivs(const CouplingParams& p, const DoubleWellPair& dw, double x1, double x2) {
  const double c = p.strength();
  const double gap = p.X_cap + x1 - x2;
  const double A1 = dw.first.A * dw.first.A, A2 = dw.second.A * dw.second.A;
  const double f = c / (gap * gap), k = 2.0 * c / (gap * gap * gap);
  return {4.0 * x1 * (x1 * x1 - A1) + dw.first.F - f, 4.0 * x2 * (x2 * x2 - A2) + dw.second.F + f,
          12.0 * x1 * x1 - 4.0 * A1 + k, 12.0 * x2 * x2 - 4.0 * A2 + k, -k};
}

inline double min_eigenvalue(const Derivs& d) {
  const double m = 0.5 * (d.h11 + d.h22);
  const double r = std::hypot(0.5 * (d.h11 - d.h22), d.h12);
  return m - r;
}

}  // namespace coupling_detail

// One minimum per quadrant: grid argmin, then damped Newton on the analytic
// potential.
inline std::vector<LandscapeMinimum> landscape_minima(const Landscape& L, const CouplingParams& p,
                                                      const DoubleWellPair& dw) {
  const std::size_t n = L.grid.size();
  std::vector<LandscapeMinimum> out;
  for (int s1 : {1, -1})
    for (int s2 : {1, -1}) {
      LandscapeMinimum m{};
      m.sigma1 = s1;
      m.sigma2 = s2;
      m.grid_value = INFINITY;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double x1 = L.grid.x(i), x2 = L.grid.x(j);
          if (x1 * s1 <= 0.0 || x2 * s2 <= 0.0) continue;
          if (L.at(i, j) < m.grid_value) {
            m.grid_value = L.at(i, j);
            m.grid_x1 = x1;
            m.grid_x2 = x2;
          }
        }
      double x1 = m.grid_x1, x2 = m.grid_x2, v = m.grid_value;
      for (int it = 0; it < 100; ++it) {
        const auto d = coupling_detail::derivs(p, dw, x1, x2);
        const double det = d.h11 * d.h22 - d.h12 * d.h12;
        double s1x = -d.g1, s2x = -d.g2;
        if (det > 0.0 && d.h11 > 0.0) {
          s1x = -(d.h22 * d.g1 - d.h12 * d.g2) / det;
          s2x = -(d.h11 * d.g2 - d.h12 * d.g1) / det;
        }
        double step = 1.0;
        double nv = v;
        double n1 = x1, n2 = x2;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
          n1 = x1 + step * s1x;
          n2 = x2 + step * s2x;
          if (p.X_cap + n1 - n2 > 0.0 && (nv = pair_potential(p, dw, n1, n2)) <= v) break;
        }
        if (!(nv <= v)) break;
        const bool done = std::abs(n1 - x1) + std::abs(n2 - x2) < 1e-15 * (1.0 + std::abs(x1) + std::abs(x2));
        x1 = n1;
        x2 = n2;
        v = nv;
        if (done) break;
      }
      m.x1 = x1;
      m.x2 = x2;
      m.value = v;
      const double c1 = s1 * dw.first.A, c2 = s2 * dw.second.A;
      m.corner_value = pair_potential(p, dw, c1, c2);
      const auto dc = coupling_detail::derivs(p, dw, c1, c2);
      m.relaxation_bound = (dc.g1 * dc.g1 + dc.g2 * dc.g2) / (2.0 * coupling_detail::min_eigenvalue(dc));
      out.push_back(m);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Two-dimensional propagation of the four product Gaussians

inline constexpr std::size_t kMaxPhaseModelNodes = 256;
inline constexpr double kMaxPhaseModelTime = 5.0;

struct PhaseModelConfig {
  std::size_t n_points = kMaxPhaseModelNodes;
  double dt = kDefaultTimeStep;
  double sample = 0.05;
  unsigned parallelism = 1;
};

struct BranchReport {
  int sigma1;
  int sigma2;
  double energy;           // corner energy of the branch
  double model_phase;      // -(E - U0) t
  double measured_phase;   // relative to the (+,+) branch, unwrapped toward the model
  double phase_error;      // |measured - model|
  double magnitude_change; // max relative change of |Psi| at the branch centre
  double norm_drift;
};

struct PhaseModelReport {
  double t;
  std::size_t n_points;
  double dt;
  CornerEnergies corners;
  std::vector<BranchReport> branches;
  double max_phase_error_rel;     // max phase error / max |model phase|
  double max_magnitude_change;
  std::string assumption;
};

namespace coupling_detail {

// Split-step propagator on an n x n product grid: half-step potential
// phases around a Crank-Nicolson kinetic step applied along each axis.
class Propagator2D {
 public:
  Propagator2D(const SpatialGrid& grid, std::vector<double> potential, double dt)
      : n_(grid.size()), dt_(dt), half_re_(n_ * n_), half_im_(n_ * n_), c_re_(n_), c_im_(n_),
        inv_re_(n_), inv_im_(n_) {
    for (std::size_t k = 0; k < n_ * n_; ++k) {
      half_re_[k] = std::cos(-0.5 * dt * potential[k]);
      half_im_[k] = std::sin(-0.5 * dt * potential[k]);
    }
    const double h = grid.spacing();
    diag_ = 1.0 / (h * h);
    off_ = -0.5 / (h * h);
    const double a = 0.5 * dt, coff = a * off_;
    double pcr = 0.0, pci = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double dr = 1.0, di = a * diag_;
      if (i > 0) {
        dr += coff * pci;
        di -= coff * pcr;
      }
      const double inv = 1.0 / (dr * dr + di * di);
      inv_re_[i] = dr * inv;
      inv_im_[i] = -di * inv;
      pcr = c_re_[i] = -coff * inv_im_[i];
      pci = c_im_[i] = coff * inv_re_[i];
    }
  }

  void step(std::vector<double>& re, std::vector<double>& im) {
    apply_half_potential(re, im);
    kinetic_axis0(re, im);
    transpose(re);
    transpose(im);
    kinetic_axis0(re, im);
    transpose(re);
    transpose(im);
    apply_half_potential(re, im);
  }

 private:
  void apply_half_potential(std::vector<double>& re, std::vector<double>& im) const {
    for (std::size_t k = 0; k < re.size(); ++k) {
      const double r = re[k] * half_re_[k] - im[k] * half_im_[k];
      im[k] = re[k] * half_im_[k] + im[k] * half_re_[k];
      re[k] = r;
    }
  }

  void transpose(std::vector<double>& v) {
    constexpr std::size_t kBlock = 32;
    for (std::size_t bi = 0; bi < n_; bi += kBlock)
      for (std::size_t bj = bi; bj < n_; bj += kBlock)
        for (std::size_t i = bi; i < std::min(bi + kBlock, n_); ++i)
          for (std::size_t j = std::max(bj, i + 1); j < std::min(bj + kBlock, n_); ++j)
            std::swap(v[i * n_ + j], v[j * n_ + i]);
  }

  // Crank-Nicolson along the row index; each inner loop runs over a
  // contiguous row so all columns are solved together.
  void kinetic_axis0(std::vector<double>& re, std::vector<double>& im) {
    const double a = 0.5 * dt_, coff = a * off_;
    dre_.resize(n_ * n_);
    dim_.resize(n_ * n_);
    zero_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* r0 = &re[i * n_];
      const double* i0 = &im[i * n_];
      const double* rm = i > 0 ? &re[(i - 1) * n_] : zero_.data();
      const double* imm = i > 0 ? &im[(i - 1) * n_] : zero_.data();
      const double* rp = i + 1 < n_ ? &re[(i + 1) * n_] : zero_.data();
      const double* ip = i + 1 < n_ ? &im[(i + 1) * n_] : zero_.data();
      const double* pdr = i > 0 ? &dre_[(i - 1) * n_] : zero_.data();
      const double* pdi = i > 0 ? &dim_[(i - 1) * n_] : zero_.data();
      double* odr = &dre_[i * n_];
      double* odi = &dim_[i * n_];
      const double ir = inv_re_[i], ii = inv_im_[i];
      for (std::size_t j = 0; j < n_; ++j) {
        const double hr = diag_ * r0[j] + off_ * (rm[j] + rp[j]);
        const double hi = diag_ * i0[j] + off_ * (imm[j] + ip[j]);
        const double br = r0[j] + a * hi + coff * pdi[j];
        const double bi = i0[j] - a * hr - coff * pdr[j];
        odr[j] = br * ir - bi * ii;
        odi[j] = br * ii + bi * ir;
      }
    }
    for (std::size_t j = 0; j < n_; ++j) {
      re[(n_ - 1) * n_ + j] = dre_[(n_ - 1) * n_ + j];
      im[(n_ - 1) * n_ + j] = dim_[(n_ - 1) * n_ + j];
    }
    for (std::size_t i = n_ - 1; i-- > 0;) {
      const double cr = c_re_[i], ci = c_im_[i];
      double* r0 = &re[i * n_];
      double* i0 = &im[i * n_];
      const double* r1 = &re[(i + 1) * n_];
      const double* i1 = &im[(i + 1) * n_];
      for (std::size_t j = 0; j < n_; ++j) {
        r0[j] = dre_[i * n_ + j] - (cr * r1[j] - ci * i1[j]);
        i0[j] = dim_[i * n_ + j] - (cr * i1[j] + ci * r1[j]);
      }
    }
  }

  std::size_t n_;
  double dt_;
  double diag_ = 0.0, off_ = 0.0;
  std::vector<double> half_re_, half_im_, c_re_, c_im_, inv_re_, inv_im_, dre_, dim_, zero_;
};

inline std::size_t nearest_node(const SpatialGrid& g, double x) {
  const double k = std::round((x - g.x_min()) / g.spacing());
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(g.size() - 1)));
}

struct BranchRun {
  double phase;
  double magnitude_change;
  double norm_drift;
};

}  // namespace coupling_detail

inline PhaseModelReport verify_phase_model_2d(const CouplingParams& p, const DoubleWellPair& dw, double t,
                                              const PhaseModelConfig& cfg = {}) {
  p.validate();
  dw.first.validate();
  dw.second.validate();
  if (cfg.n_points > kMaxPhaseModelNodes || t > kMaxPhaseModelTime) {
    std::ostringstream msg;
    msg << "2D verification is limited to " << kMaxPhaseModelNodes << "^2 nodes and t <= "
        << kMaxPhaseModelTime << "; try n_points = " << kMaxPhaseModelNodes << " and t = "
        << std::min(t, kMaxPhaseModelTime);
    throw ResourceError(msg.str());
  }
  if (!(t > 0.0)) throw ConfigError("verification time must be > 0");
  if (!(p.a >= 2.5) || dw.first.A != p.a || dw.second.A != p.a)
    throw ConfigError("2D verification requires matching wells with a >= 2.5");

  const SpatialGrid grid = double_well_grid(p.a, cfg.n_points);
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  std::vector<double> V(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double gap = p.X_cap + grid.x(i) - grid.x(j);
      if (!(gap > 0.0)) throw DomainError("plate gap closes inside the 2D domain; increase X_cap");
      V[i * n + j] = pair_potential(p, dw, grid.x(i), grid.x(j));
    }
  const auto corners = corner_energies(p);
  const auto plus = gaussian_state(dw.first, Side::kPlus, grid);
  const auto minus = gaussian_state(dw.first, Side::kMinus, grid);

  const std::array<std::array<int, 2>, 4> signs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample / cfg.dt)));
  const auto runs = parallel_map(4, cfg.parallelism, [&](std::size_t b) {
    const auto& f1 = signs[b][0] > 0 ? plus : minus;
    const auto& f2 = signs[b][1] > 0 ? plus : minus;
    std::vector<double> re(n * n), im(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const Complex v = f1[i] * f2[j];
        re[i * n + j] = v.real();
        im[i * n + j] = v.imag();
      }
    const std::vector<double> re0 = re, im0 = im;
    auto norm = [&] {
      double s = 0.0;
      for (std::size_t k = 0; k < n * n; ++k) s += re[k] * re[k] + im[k] * im[k];
      return s * h * h;
    };
    const double norm0 = norm();
    const std::size_t c = coupling_detail::nearest_node(grid, signs[b][0] * p.a) * n +
                          coupling_detail::nearest_node(grid, signs[b][1] * p.a);
    const double mag0 = std::hypot(re[c], im[c]);
    double mag_change = 0.0;
    coupling_detail::Propagator2D prop(grid, V, cfg.dt);
    const auto steps = static_cast<std::size_t>(std::ceil(t / cfg.dt - 1e-9));
    coupling_detail::Propagator2D last(grid, V, t - static_cast<double>(steps - 1) * cfg.dt);
    for (std::size_t s = 0; s < steps; ++s) {
      (s + 1 == steps ? last : prop).step(re, im);
      if ((s + 1) % stride == 0 || s + 1 == steps)
        mag_change = std::max(mag_change, std::abs(std::hypot(re[c], im[c]) / mag0 - 1.0));
    }
    Complex ov{0.0, 0.0};
    for (std::size_t k = 0; k < n * n; ++k) ov += Complex(re0[k], -im0[k]) * Complex(re[k], im[k]);
    const double drift = std::abs(norm() - norm0);
    if (drift > 1e-8) throw InstabilityError("2D propagation norm drift exceeds 1e-8");
    return coupling_detail::BranchRun{std::arg(ov), mag_change, drift};
  });

  PhaseModelReport r{t, n, cfg.dt, corners, {}, 0.0, 0.0,
                     "constant V1 over the window; switching transients are not modelled"};
  const std::array<double, 4> energies{corners.U0, corners.E_plus, corners.E_minus, corners.U0};
  double max_model = 0.0, max_err = 0.0;
  for (std::size_t b = 0; b < 4; ++b) {
    const double model = -(energies[b] - corners.U0) * t;
    double measured = runs[b].phase - runs[0].phase;
    measured -= 2.0 * std::numbers::pi * std::round((measured - model) / (2.0 * std::numbers::pi));
    const double err = std::abs(measured - model);
    r.branches.push_back({signs[b][0], signs[b][1], energies[b], model, measured, err,
                          runs[b].magnitude_change, runs[b].norm_drift});
    max_model = std::max(max_model, std::abs(model));
    max_err = std::max(max_err, err);
    r.max_magnitude_change = std::max(r.max_magnitude_change, runs[b].magnitude_change);
  }
  r.max_phase_error_rel = max_model > 0.0 ? max_err / max_model : max_err;
  return r;
}

}  // namespace nemsq
