#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nemsq/double_well.hpp"
#include "nemsq/error.hpp"
#include "nemsq/numerics/observe.hpp"
#include "nemsq/numerics/propagate.hpp"
#include "nemsq/numerics/roots.hpp"
#include "nemsq/parallel.hpp"

namespace nemsq {

enum class ScheduleKind { kWellSeparation, kElectricField };

// tanh pulse. For kWellSeparation the amplitude is a0 (units of x_u); for
// kElectricField it is F0 in units of E_u = omega / a0.
struct PulseSchedule {
  ScheduleKind kind = ScheduleKind::kWellSeparation;
  double t1 = 20.0;
  double t2 = 27.02;
  double ramp = 0.2;
  double amplitude = 3.0;

  // t2 == t1 is the identity pulse and is accepted.
  void validate() const {
    if (!(std::isfinite(t1) && std::isfinite(t2) && std::isfinite(ramp) && std::isfinite(amplitude)))
      throw ConfigError("pulse schedule fields must be finite");
    if (!(t1 > 0.0)) throw ConfigError("pulse schedule requires t1 > 0");
    if (t2 < t1) throw ConfigError("pulse schedule requires t2 >= t1");
    if (!(ramp > 0.0)) throw ConfigError("pulse schedule requires ramp > 0");
    if (kind == ScheduleKind::kWellSeparation && amplitude < 0.0)
      throw ConfigError("well-separation amplitude must be >= 0");
  }
};

inline double schedule_value(const PulseSchedule& s, double t) {
  const double up = std::tanh((t - s.t1) / s.ramp);
  const double down = std::tanh((t - s.t2) / s.ramp);
  if (s.kind == ScheduleKind::kWellSeparation) return 0.5 * s.amplitude * (down - up + 2.0);
  return 0.5 * s.amplitude * (up - down);
}

struct ProtocolConfig {
  std::size_t n_points = kDefaultGridPoints;
  double dt = kDefaultTimeStep;
  double stationarity_window = 5.0;
  double stationarity_tolerance = 1e-3;
  double stationarity_sample = 0.05;  // probe spacing inside the window
  double trajectory_sample = 0.0;     // > 0 records (t, schedule, probes)
};

// Observation point spacing relative to the time step.
inline std::size_t stride_for(double sample, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample / dt)));
}

struct TrajectorySample {
  double t;
  double schedule_value;
  double mag_plus;
  double mag_minus;
  double phase_diff;
};

struct ProtocolResult {
  WavefunctionState terminal_state;
  double mag_plus = 0.0;
  double mag_minus = 0.0;
  double phase_diff = 0.0;
  bool stationary = false;
  double stationarity_deviation = 0.0;
  double norm_drift = 0.0;
  std::vector<TrajectorySample> trajectory{};
  std::vector<std::string> warnings{};
};

inline constexpr double kMinSettleTime = 10.0;
inline constexpr double kDefaultSettleTime = 20.0;

namespace detail {

// Time-dependent double-well potential driven by a schedule, in the factory
// form accepted by propagate().
struct DrivenDoubleWell {
  PulseSchedule schedule;
  DoubleWellParams base;
  double field_scale;  // multiplies the electric-field schedule value

  auto operator()(double t) const {
    double A = base.A;
    double F = base.F;
    if (schedule.kind == ScheduleKind::kWellSeparation)
      A = schedule_value(schedule, t);
    else
      F += field_scale * schedule_value(schedule, t);
    const double A2 = A * A;
    return [A2, F](double x) {
      const double s = x * x - A2;
      return s * s + F * x;
    };
  }
};

inline DrivenDoubleWell driven(const PulseSchedule& s, const DoubleWellParams& base) {
  const double scale = s.kind == ScheduleKind::kElectricField ? field_unit(base.A) : 0.0;
  return DrivenDoubleWell{s, base, scale};
}

inline double probe_position(const PulseSchedule& s, const DoubleWellParams& base) {
  return s.kind == ScheduleKind::kWellSeparation ? s.amplitude : base.A;
}

}  // namespace detail

using InitialCondition = std::variant<Side, WavefunctionState>;

// Propagates from `start` (which may be a cached state part-way through the
// protocol) to t3 and extracts the terminal observables at +-a0.
inline ProtocolResult finish_protocol(const WavefunctionState& start, const PulseSchedule& s,
                                      const DoubleWellParams& base, double t3,
                                      const ProtocolConfig& cfg, double initial_norm = NAN) {
  const double a0 = detail::probe_position(s, base);
  auto potential = detail::driven(s, base);
  PropagationOptions opt;
  opt.dt = cfg.dt;

  ProtocolResult r{start};
  const double norm0 = std::isnan(initial_norm) ? start.norm_squared() : initial_norm;
  const double window_start = std::max(start.time(), t3 - cfg.stationarity_window);

  WavefunctionState state = start;
  auto record = [&](const WavefunctionState& st) {
    if (!r.trajectory.empty() && r.trajectory.back().t == st.time()) return;
    const auto p = observe(st, a0);
    const auto m = observe(st, -a0);
    r.trajectory.push_back({st.time(), schedule_value(s, st.time()), p.magnitude, m.magnitude,
                            wrap_phase(p.phase - m.phase)});
  };
  if (cfg.trajectory_sample > 0.0) {
    record(state);
    opt.stride = stride_for(cfg.trajectory_sample, cfg.dt);
    if (window_start > state.time()) state = propagate(state, potential, window_start, opt, record);
  } else if (window_start > state.time()) {
    state = propagate(state, potential, window_start, opt);
  }

  // Stationarity window: probe magnitudes sampled up to t3.
  std::vector<std::pair<double, double>> window;
  auto sample = [&](const WavefunctionState& st) {
    window.emplace_back(observe(st, a0).magnitude, observe(st, -a0).magnitude);
    if (cfg.trajectory_sample > 0.0) record(st);
  };
  opt.stride = stride_for(cfg.trajectory_sample > 0.0 ? std::min(cfg.trajectory_sample, cfg.stationarity_sample)
                                                      : cfg.stationarity_sample,
                          cfg.dt);
  sample(state);
  state = propagate(state, potential, t3, opt, sample);

  const auto p = observe(state, a0);
  const auto m = observe(state, -a0);
  r.mag_plus = p.magnitude;
  r.mag_minus = m.magnitude;
  r.phase_diff = wrap_phase(p.phase - m.phase);
  const double scale = std::max(r.mag_plus, r.mag_minus);
  double dev = 0.0;
  for (const auto& [mp, mm] : window)
    dev = std::max({dev, std::abs(mp - r.mag_plus), std::abs(mm - r.mag_minus)});
  r.stationarity_deviation = scale > 0.0 ? dev / scale : 0.0;
  r.stationary = r.stationarity_deviation < cfg.stationarity_tolerance;
  if (!r.stationary) {
    std::ostringstream msg;
    msg << "terminal window not stationary (relative deviation " << r.stationarity_deviation << ")";
    r.warnings.push_back(msg.str());
  }
  r.norm_drift = std::abs(state.norm_squared() - norm0);
  const double edge = max_boundary_amplitude(state);
  if (edge > 1e-6) {
    std::ostringstream msg;
    msg << "boundary amplitude " << edge << " exceeds 1e-6; enlarge the domain";
    r.warnings.push_back(msg.str());
  }
  r.terminal_state = std::move(state);
  return r;
}

inline WavefunctionState initial_state(const InitialCondition& init, const PulseSchedule& s,
                                       const DoubleWellParams& base, const ProtocolConfig& cfg) {
  if (const auto* side = std::get_if<Side>(&init)) {
    const double a0 = detail::probe_position(s, base);
    const SpatialGrid grid = double_well_grid(a0, cfg.n_points);
    return gaussian_state({a0, 0.0}, *side, grid);
  }
  WavefunctionState st = std::get<WavefunctionState>(init);
  st.set_time(0.0);
  return st;
}

inline ProtocolResult run_protocol(const InitialCondition& init, const PulseSchedule& s,
                                   const DoubleWellParams& base, double t3,
                                   const ProtocolConfig& cfg = {}) {
  s.validate();
  base.validate();
  if (!(t3 >= s.t2 + kMinSettleTime))
    throw ConfigError("run_protocol requires t3 >= t2 + 10");
  return finish_protocol(initial_state(init, s, base, cfg), s, base, t3, cfg);
}

// ---------------------------------------------------------------------------
// t2 scans and gate calibration

// Repeated protocol runs that differ only in t2. Before t2 - 20 ramp the
// well-separation schedule does not depend on t2 in double precision
// (tanh(-20) == -1), so the shared prefix is propagated once and reused.
class T2Experiment {
 public:
  T2Experiment(InitialCondition init, PulseSchedule tmpl, DoubleWellParams base, double t2_min,
               ProtocolConfig cfg = {}, double settle = kDefaultSettleTime)
      : tmpl_(tmpl), base_(base), cfg_(cfg), settle_(settle), start_(initial_state(init, tmpl, base, cfg)) {
    tmpl_.validate();
    base_.validate();
    if (settle < kMinSettleTime) throw ConfigError("settle time t3 - t2 must be >= 10");
    if (tmpl_.kind != ScheduleKind::kWellSeparation)
      throw ConfigError("t2 experiments use a well-separation schedule");
    const double branch = std::min(t2_min - 20.0 * tmpl_.ramp, tmpl_.t1 - 20.0 * tmpl_.ramp);
    if (branch > 0.0) {
      PulseSchedule open = tmpl_;
      open.t2 = std::numeric_limits<double>::infinity();
      PropagationOptions opt;
      opt.dt = cfg_.dt;
      prefix_ = propagate(start_, detail::driven(open, base_), branch, opt);
    }
  }

  PulseSchedule schedule(double t2) const {
    PulseSchedule s = tmpl_;
    s.t2 = t2;
    return s;
  }

  ProtocolResult run(double t2) const {
    const PulseSchedule s = schedule(t2);
    s.validate();
    const double t3 = t2 + settle_;
    if (prefix_ && t2 - 20.0 * tmpl_.ramp >= prefix_->time())
      return finish_protocol(*prefix_, s, base_, t3, cfg_, start_.norm_squared());
    return finish_protocol(start_, s, base_, t3, cfg_);
  }

  const ProtocolConfig& config() const { return cfg_; }
  const PulseSchedule& schedule_template() const { return tmpl_; }
  const DoubleWellParams& base() const { return base_; }
  double settle() const { return settle_; }

 private:
  PulseSchedule tmpl_;
  DoubleWellParams base_;
  ProtocolConfig cfg_;
  double settle_;
  WavefunctionState start_;
  std::optional<WavefunctionState> prefix_;
};

struct ScanRow {
  double t2;
  double mag_plus;
  double mag_minus;
  double phase_diff;
  bool stationary;
  std::string flags;
};

struct ScanRange {
  double lo = 24.0;
  double hi = 32.0;
  double step = 0.05;
};

inline std::vector<double> scan_points(const ScanRange& r) {
  if (!(r.step > 0.0) || !(r.hi >= r.lo)) throw ConfigError("scan range requires lo <= hi and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((r.hi - r.lo) / r.step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = r.lo + static_cast<double>(i) * r.step;
  return out;
}

inline std::vector<ScanRow> scan_t2(const T2Experiment& exp, const std::vector<double>& t2_values,
                                    unsigned parallelism = 1) {
  const auto& s = exp.schedule_template();
  for (double t2 : t2_values)
    if (t2 < s.t1 + 2.0 * s.ramp || t2 > s.t1 + 40.0)
      throw ConfigError("scan_t2 values must lie within [t1 + 2 ramp, t1 + 40]");
  return parallel_map(t2_values.size(), parallelism, [&](std::size_t i) {
    ScanRow row{t2_values[i], NAN, NAN, NAN, false, ""};
    try {
      const auto r = exp.run(t2_values[i]);
      row.mag_plus = r.mag_plus;
      row.mag_minus = r.mag_minus;
      row.phase_diff = r.phase_diff;
      row.stationary = r.stationary;
      if (!r.stationary) row.flags = "non_stationary";
    } catch (const Error& e) {
      row.flags = std::string("failed: ") + e.what();
    }
    return row;
  });
}

inline std::vector<ScanRow> scan_t2(const PulseSchedule& tmpl, const DoubleWellParams& base,
                                    const ScanRange& range = {}, const ProtocolConfig& cfg = {},
                                    unsigned parallelism = 1) {
  const auto pts = scan_points(range);
  const T2Experiment exp(Side::kPlus, tmpl, base, pts.front(), cfg);
  return scan_t2(exp, pts, parallelism);
}

// Jumps of phase_diff between neighbouring scan rows, and whether each one
// lies within one scan step of a magnitude zero (a local minimum of either
// probe magnitude below `zero_fraction` of the Gaussian peak value).
struct PhaseJump {
  std::size_t index;  // jump between rows index and index + 1
  bool colocated;
};

inline std::vector<PhaseJump> phase_jumps(const std::vector<ScanRow>& rows, double peak,
                                          double zero_fraction = 0.2) {
  std::vector<PhaseJump> out;
  auto is_zero = [&](std::size_t j) {
    auto local_min = [&](auto get) {
      const double v = get(rows[j]);
      if (v > zero_fraction * peak) return false;
      const bool left = j == 0 || v <= get(rows[j - 1]);
      const bool right = j + 1 == rows.size() || v <= get(rows[j + 1]);
      return left && right;
    };
    return local_min([](const ScanRow& r) { return r.mag_plus; }) ||
           local_min([](const ScanRow& r) { return r.mag_minus; });
  };
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    double d = std::abs(rows[i + 1].phase_diff - rows[i].phase_diff);
    d = std::min(d, 2.0 * std::numbers::pi - d);
    if (d <= 0.5 * std::numbers::pi) continue;
    bool near = false;
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(rows.size() - 1, i + 2);
    for (std::size_t j = lo; j <= hi && !near; ++j) near = is_zero(j);
    out.push_back({i, near});
  }
  return out;
}

enum class GateTarget { kSqrtNot, kNot };

struct CalibrationResult {
  GateTarget target;
  double t2_star;
  double residual;  // |mag_plus - mag_minus| (sqrt_not) or mag_plus (not)
  double bracket_lo;
  double bracket_hi;
  int evaluations;
  ProtocolResult terminal;
  std::vector<ScanRow> scan;
};

class CalibrationFailure : public CalibrationError {
 public:
  CalibrationFailure(const std::string& what, std::vector<ScanRow> table)
      : CalibrationError(what), table_(std::move(table)) {}
  const std::vector<ScanRow>& table() const { return table_; }

 private:
  std::vector<ScanRow> table_;
};

inline constexpr double kCalibrationTolerance = 1e-4;

// Bracket selection on a scan table:
//  sqrt_not: the first row pair where mag_plus drops from above mag_minus to
//            below it;
//  not:      the first local minimum of mag_plus after that crossing (or after
//            the scan start when there is none), refined over the two
//            neighbouring scan steps.
inline std::optional<std::pair<std::size_t, std::size_t>> select_bracket(
    GateTarget target, const std::vector<ScanRow>& rows) {
  auto valid = [](const ScanRow& r) { return std::isfinite(r.mag_plus) && std::isfinite(r.mag_minus); };
  std::size_t first_cross = rows.size();
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (!valid(rows[i]) || !valid(rows[i + 1])) continue;
    const double a = rows[i].mag_plus - rows[i].mag_minus;
    const double b = rows[i + 1].mag_plus - rows[i + 1].mag_minus;
    if (a > 0.0 && b <= 0.0) {
      first_cross = i;
      break;
    }
  }
  if (target == GateTarget::kSqrtNot) {
    if (first_cross == rows.size()) return std::nullopt;
    return std::make_pair(first_cross, first_cross + 1);
  }
  const std::size_t start = first_cross == rows.size() ? 1 : first_cross + 1;
  for (std::size_t j = std::max<std::size_t>(start, 1); j + 1 < rows.size(); ++j) {
    if (!valid(rows[j - 1]) || !valid(rows[j]) || !valid(rows[j + 1])) continue;
    if (rows[j].mag_plus <= rows[j - 1].mag_plus && rows[j].mag_plus <= rows[j + 1].mag_plus)
      return std::make_pair(j - 1, j + 1);
  }
  return std::nullopt;
}

// Probe magnitudes oriented by the initial side: `home` is the well the
// packet starts in, `away` the opposite one.
struct OrientedMagnitudes {
  double home;
  double away;
};

inline OrientedMagnitudes oriented(double mag_plus, double mag_minus, Side initial) {
  return initial == Side::kPlus ? OrientedMagnitudes{mag_plus, mag_minus}
                                : OrientedMagnitudes{mag_minus, mag_plus};
}

inline CalibrationResult calibrate_gate(GateTarget target, const T2Experiment& exp,
                                        std::vector<ScanRow> scan, Side initial = Side::kPlus,
                                        double tol = kCalibrationTolerance) {
  std::vector<ScanRow> view = scan;
  if (initial == Side::kMinus)
    for (auto& r : view) std::swap(r.mag_plus, r.mag_minus);
  const auto bracket = select_bracket(target, view);
  if (!bracket)
    throw CalibrationFailure(
        target == GateTarget::kSqrtNot ? "no mag_plus/mag_minus crossing in the scan range"
                                       : "no mag_plus minimum in the scan range",
        std::move(scan));
  const double lo = view[bracket->first].t2;
  const double hi = view[bracket->second].t2;

  auto objective = [&](const ProtocolResult& r) {
    const auto m = oriented(r.mag_plus, r.mag_minus, initial);
    return target == GateTarget::kSqrtNot ? m.home - m.away : m.home;
  };
  RootResult root{};
  if (target == GateTarget::kSqrtNot) {
    const double flo = view[bracket->first].mag_plus - view[bracket->first].mag_minus;
    const double fhi = view[bracket->second].mag_plus - view[bracket->second].mag_minus;
    root = bisect([&](double t2) { return objective(exp.run(t2)); }, lo, hi, tol, flo, fhi);
  } else {
    root = golden_section([&](double t2) { return objective(exp.run(t2)); }, lo, hi, tol);
  }
  ProtocolResult terminal = exp.run(root.x);
  const double residual = std::abs(objective(terminal));
  return CalibrationResult{target, root.x, residual, lo, hi, root.evaluations + 1,
                           std::move(terminal), std::move(scan)};
}

inline CalibrationResult calibrate_gate(GateTarget target, const PulseSchedule& tmpl,
                                        const DoubleWellParams& base, const ScanRange& range = {},
                                        const ProtocolConfig& cfg = {}, unsigned parallelism = 1,
                                        Side initial = Side::kPlus) {
  const auto pts = scan_points(range);
  const T2Experiment exp(initial, tmpl, base, pts.front(), cfg);
  return calibrate_gate(target, exp, scan_t2(exp, pts, parallelism), initial);
}

// ---------------------------------------------------------------------------
// Phase-shift gate

struct PhaseGateResult {
  double theta;             // sigma_z rotation angle
  double magnitude_change;  // relative change of |psi(a0)| against the field-free run
  double norm_drift;
  std::vector<std::pair<double, double>> theta_trace;  // (t, theta(t))
  std::vector<std::string> warnings{};
};

struct PhaseGateConfig {
  ProtocolConfig protocol{};
  double ramp = 0.2;
  double tail = 2.0;  // run continues to t2 + tail
  double sample = 0.01;
};

// Runs psi_side under the electric-field pulse and a field-free reference
// over the same window. theta is -2 times the unwrapped phase of the probe
// amplitude at the occupied well relative to the reference, so psi_+ picks up
// exp(-i theta/2) as in U_Z(theta).
inline PhaseGateResult phase_gate_run(double F0, double t1, double t2, const DoubleWellParams& base,
                                      const PhaseGateConfig& cfg = {}, Side side = Side::kPlus) {
  base.validate();
  if (base.A < 2.5) throw ConfigError("phase_gate_run requires A >= 2.5");
  PulseSchedule s{ScheduleKind::kElectricField, t1, t2, cfg.ramp, F0};
  s.validate();
  const SpatialGrid grid = double_well_grid(base.A, cfg.protocol.n_points);
  const WavefunctionState psi0 = gaussian_state({base.A, 0.0}, side, grid);
  const double probe = side_sign(side) * base.A;
  const double t_end = t2 + cfg.tail;

  PropagationOptions opt;
  opt.dt = cfg.protocol.dt;
  opt.stride = stride_for(cfg.sample, cfg.protocol.dt);
  std::vector<std::pair<double, Complex>> field_probe, ref_probe;
  field_probe.emplace_back(0.0, interpolate(psi0, probe));
  ref_probe.emplace_back(0.0, interpolate(psi0, probe));
  const auto field_final = propagate(psi0, detail::driven(s, base), t_end, opt,
                                     [&](const WavefunctionState& st) {
                                       field_probe.emplace_back(st.time(), interpolate(st, probe));
                                     });
  PulseSchedule off = s;
  off.amplitude = 0.0;
  const auto ref_final = propagate(psi0, detail::driven(off, base), t_end, opt,
                                   [&](const WavefunctionState& st) {
                                     ref_probe.emplace_back(st.time(), interpolate(st, probe));
                                   });
  field_probe.emplace_back(t_end, interpolate(field_final, probe));
  ref_probe.emplace_back(t_end, interpolate(ref_final, probe));

  PhaseGateResult r{};
  double unwrapped = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < field_probe.size(); ++i) {
    const double ph = std::arg(field_probe[i].second / ref_probe[i].second);
    if (i > 0) {
      double d = ph - prev;
      d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
      unwrapped += d;
    } else {
      unwrapped = ph;
    }
    prev = ph;
    r.theta_trace.emplace_back(field_probe[i].first, -2.0 * unwrapped);
  }
  r.theta = r.theta_trace.back().second;
  r.norm_drift = std::max(std::abs(field_final.norm_squared() - psi0.norm_squared()),
                          std::abs(ref_final.norm_squared() - psi0.norm_squared()));
  r.magnitude_change =
      std::abs(std::abs(field_probe.back().second) / std::abs(ref_probe.back().second) - 1.0);
  if (r.magnitude_change > 1e-2) {
    std::ostringstream msg;
    msg << "magnitude changed by " << r.magnitude_change << "; the field pulse is not adiabatic";
    r.warnings.push_back(msg.str());
  }
  return r;
}

}  // namespace nemsq
