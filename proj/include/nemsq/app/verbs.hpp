#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "nemsq/app/config.hpp"
#include "nemsq/app/output.hpp"
#include "nemsq/control.hpp"
#include "nemsq/convergence.hpp"
#include "nemsq/coupling.hpp"
#include "nemsq/double_well.hpp"
#include "nemsq/gates.hpp"
#include "nemsq/mechanics.hpp"

namespace nemsq::app {

struct VerbResult {
  Json summary = Json::object();
  std::vector<std::string> warnings;
  std::string status = "ok";
  int exit_code = 0;
};

// A prepared run: configuration already validated, execution deferred so
// that malformed input never produces output files.
using Runner = std::function<VerbResult(RunOutput&)>;

namespace parse {

struct Numerics {
  std::size_t n_points;
  double dt;
  unsigned parallel;
};

inline Numerics numerics(const Json& c) {
  return {get_count(c, "numerics.n_points", SpatialGrid::kMinPoints), get_positive(c, "numerics.dt"),
          static_cast<unsigned>(get_count(c, "numerics.parallel", 1))};
}

inline DoubleWellParams double_well(const Json& c) {
  DoubleWellParams p{get_number(c, "double_well.A"), get_number(c, "double_well.F")};
  if (p.A < 0.0) throw ConfigError("field 'double_well.A' must be >= 0");
  return p;
}

inline PulseSchedule schedule(const Json& c) {
  PulseSchedule s;
  s.kind = get_choice(c, "schedule.kind", {"well_separation", "electric_field"}) == "well_separation"
               ? ScheduleKind::kWellSeparation
               : ScheduleKind::kElectricField;
  s.t1 = get_number(c, "schedule.t1");
  s.t2 = get_number(c, "schedule.t2");
  s.ramp = get_number(c, "schedule.ramp");
  s.amplitude = get_number(c, "schedule.amplitude");
  if (!(s.t1 > 0.0)) throw ConfigError("field 'schedule.t1' must be > 0");
  if (s.t2 < s.t1) throw ConfigError("field 'schedule.t2' must be >= schedule.t1");
  if (!(s.ramp > 0.0)) throw ConfigError("field 'schedule.ramp' must be > 0");
  s.validate();
  return s;
}

inline Side side(const Json& c, std::string_view path) {
  return get_choice(c, path, {"plus", "minus"}) == "plus" ? Side::kPlus : Side::kMinus;
}

inline ProtocolConfig protocol(const Numerics& n) {
  ProtocolConfig p;
  p.n_points = n.n_points;
  p.dt = n.dt;
  return p;
}

inline CouplingParams coupling(const Json& c) {
  CouplingParams p{get_number(c, "coupling.eps0S"), get_number(c, "coupling.X_cap"), get_number(c, "coupling.V1"),
                   get_number(c, "coupling.a")};
  if (!(p.X_cap > 2.0 * p.a)) throw ConfigError("field 'coupling.X_cap' must exceed 2 * coupling.a");
  p.validate();
  return p;
}

inline mechanics::PlateGeometry plate(const Json& c) {
  mechanics::PlateGeometry g{get_positive(c, "mechanics.L0"), get_positive(c, "mechanics.y0"),
                             get_positive(c, "mechanics.kappa"),
                             get_choice(c, "mechanics.boundary", {"fixed", "free"}) == "fixed"
                                 ? mechanics::Boundary::kFixed
                                 : mechanics::Boundary::kFree};
  if (!(g.y0 < g.L0)) throw ConfigError("field 'mechanics.y0' must be < mechanics.L0");
  g.validate();
  return g;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

}  // namespace parse

inline Json to_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  return a;
}

inline Json matrix_json(const GateMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

inline Runner prepare_spectrum(const Json& c) {
  const auto num = parse::numerics(c);
  const auto dw = parse::double_well(c);
  const bool field = get_choice(c, "spectrum.variable", {"A", "F"}) == "F";
  const double lo = get_number(c, "spectrum.min"), hi = get_number(c, "spectrum.max");
  if (hi < lo) throw ConfigError("field 'spectrum.max' must be >= spectrum.min");
  if (!field && lo < 0.0) throw ConfigError("field 'spectrum.min' must be >= 0 when scanning A");
  const auto points = get_count(c, "spectrum.points", 1);
  const auto k = get_count(c, "spectrum.k", 1);
  if (k > num.n_points / 4) throw ConfigError("field 'spectrum.k' must be <= numerics.n_points / 4");
  if (field && !(dw.A > 0.0)) throw ConfigError("field 'double_well.A' must be > 0 for field scans");
  return [=](RunOutput& out) {
    SpectrumScanOptions opt;
    opt.k = k;
    opt.n_points = num.n_points;
    opt.parallelism = num.parallel;
    const auto values = parse::linspace(lo, hi, points);
    const auto scan =
        spectrum_scan(field ? ScanVariable::kField : ScanVariable::kWellSeparation, values, dw, opt);
    std::vector<std::string> header{"scan_value"};
    for (std::size_t j = 0; j < k; ++j) header.push_back("E" + std::to_string(j));
    header.push_back("flags");
    CsvTable table(header);
    CsvTable split({"scan_value", "delta", "log10_delta", "floor_limited"});
    VerbResult r;
    std::size_t failures = 0;
    for (const auto& row : scan.rows) {
      auto& t = table.row() << row.value;
      for (double e : row.energies) t << e;
      t << row.flags;
      if (!row.flags.empty()) ++failures;
      if (k >= 2) {
        const double d = row.energies[1] - row.energies[0];
        split.row() << row.value << d << (d > 0.0 ? std::log10(d) : -INFINITY)
                    << (std::abs(d) < kSplittingFloor * std::abs(row.energies[0]));
      }
    }
    out.write_csv("spectrum.csv", table);
    if (k >= 2) out.write_csv("splitting.csv", split);
    r.summary = {{"rows", scan.rows.size()}, {"levels", k}, {"failed_points", failures},
                 {"variable", field ? "F" : "A"}};
    if (failures) {
      r.warnings.push_back(std::to_string(failures) + " scan points failed; see the flags column");
      r.status = "partial";
      r.exit_code = 3;
    }
    return r;
  };
}

inline Runner prepare_wavefunctions(const Json& c) {
  const auto num = parse::numerics(c);
  const auto dw = parse::double_well(c);
  const auto k = get_count(c, "wavefunctions.k", 1);
  if (k > num.n_points / 4) throw ConfigError("field 'wavefunctions.k' must be <= numerics.n_points / 4");
  return [=](RunOutput& out) {
    const SpatialGrid grid = double_well_grid(std::max(dw.A, 0.0), num.n_points);
    const auto eig = double_well_spectrum(dw, grid, k);
    std::vector<std::string> header{"x", "V"};
    for (std::size_t j = 0; j < k; ++j) header.push_back("psi" + std::to_string(j));
    const bool gauss = dw.A > 0.0;
    std::optional<WavefunctionState> gp, gm;
    if (gauss) {
      header.push_back("gauss_plus");
      header.push_back("gauss_minus");
      gp = gaussian_state(dw, Side::kPlus, grid);
      gm = gaussian_state(dw, Side::kMinus, grid);
    }
    const double scale = 1.0 / std::sqrt(grid.spacing());
    CsvTable t(header);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto& row = t.row() << grid.x(i) << potential_value(dw, grid.x(i));
      for (std::size_t j = 0; j < k; ++j) row << eig.eigenvectors[j][i] * scale;
      if (gauss) row << (*gp)[i].real() << (*gm)[i].real();
    }
    out.write_csv("wavefunctions.csv", t);
    VerbResult r;
    r.summary = {{"energies", to_json(eig.eigenvalues)}, {"grid_points", grid.size()},
                 {"half_width", grid.x_max()}};
    if (dw.A > 0.0 && dw.A < kGaussianValidityA)
      r.warnings.push_back("Gaussian states are a poor qubit basis for A < 2");
    return r;
  };
}

namespace detail_verbs {

inline void write_scan(RunOutput& out, const std::vector<ScanRow>& rows) {
  CsvTable t({"t2", "mag_plus", "mag_minus", "phase_diff", "stationary", "flags"});
  for (const auto& r : rows) t.row() << r.t2 << r.mag_plus << r.mag_minus << r.phase_diff << r.stationary << r.flags;
  out.write_csv("scan.csv", t);
}

inline Json protocol_json(const ProtocolResult& p) {
  return {{"mag_plus", p.mag_plus},
          {"mag_minus", p.mag_minus},
          {"phase_diff", p.phase_diff},
          {"stationary", p.stationary},
          {"stationarity_deviation", p.stationarity_deviation},
          {"norm_drift", p.norm_drift}};
}

}  // namespace detail_verbs

inline Runner prepare_gate_search(const Json& c) {
  const auto num = parse::numerics(c);
  const auto dw = parse::double_well(c);
  const auto s = parse::schedule(c);
  if (s.kind != ScheduleKind::kWellSeparation)
    throw ConfigError("field 'schedule.kind' must be well_separation for gate-search");
  const bool sqrt_not = get_choice(c, "gate_search.target", {"sqrt_not", "not"}) == "sqrt_not";
  const ScanRange range{get_number(c, "gate_search.t2_min"), get_number(c, "gate_search.t2_max"),
                        get_positive(c, "gate_search.step")};
  if (range.hi < range.lo) throw ConfigError("field 'gate_search.t2_max' must be >= gate_search.t2_min");
  if (range.lo < s.t1 + 2.0 * s.ramp || range.hi > s.t1 + 40.0)
    throw ConfigError("fields 'gate_search.t2_min/t2_max' must lie within [t1 + 2 ramp, t1 + 40]");
  const double tol = get_positive(c, "gate_search.tolerance");
  if (tol > 1e-3) throw ConfigError("field 'gate_search.tolerance' must be <= 1e-3");
  const Side init = parse::side(c, "gate_search.initial");
  return [=](RunOutput& out) {
    const auto pts = scan_points(range);
    const T2Experiment exp(init, s, dw, pts.front(), parse::protocol(num));
    const auto table = scan_t2(exp, pts, num.parallel);
    detail_verbs::write_scan(out, table);
    VerbResult r;
    const double peak = std::pow(harmonic_approx(s.amplitude).omega / std::numbers::pi, 0.25);
    const auto jumps = phase_jumps(table, peak);
    const auto colocated = std::count_if(jumps.begin(), jumps.end(), [](const PhaseJump& j) { return j.colocated; });
    r.summary["phase_jumps"] = jumps.size();
    r.summary["phase_jumps_colocated"] = colocated;
    try {
      const auto cal = calibrate_gate(sqrt_not ? GateTarget::kSqrtNot : GateTarget::kNot, exp, table, init, tol);
      r.summary["target"] = sqrt_not ? "sqrt_not" : "not";
      r.summary["t2_star"] = cal.t2_star;
      r.summary["residual"] = cal.residual;
      r.summary["bracket"] = {cal.bracket_lo, cal.bracket_hi};
      r.summary["evaluations"] = cal.evaluations;
      r.summary["terminal"] = detail_verbs::protocol_json(cal.terminal);
      r.warnings = cal.terminal.warnings;
    } catch (const CalibrationFailure& e) {
      r.summary["error"] = e.what();
      r.status = "failed";
      r.exit_code = 3;
    }
    return r;
  };
}

inline Runner prepare_gate_run(const Json& c) {
  const auto num = parse::numerics(c);
  const auto dw = parse::double_well(c);
  const auto s = parse::schedule(c);
  const auto t3_opt = get_optional_number(c, "gate_run.t3");
  const double t3 = t3_opt.value_or(s.t2 + kDefaultSettleTime);
  if (t3 < s.t2 + kMinSettleTime) throw ConfigError("field 'gate_run.t3' must be >= schedule.t2 + 10");
  const Side init = parse::side(c, "gate_run.initial");
  const double sample = get_positive(c, "gate_run.sample");
  auto profile_times = get_numbers(c, "gate_run.profile_times");
  for (double t : profile_times)
    if (!(t > 0.0 && t <= t3)) throw ConfigError("field 'gate_run.profile_times' entries must lie in (0, t3]");
  std::sort(profile_times.begin(), profile_times.end());
  if (s.kind == ScheduleKind::kElectricField && dw.A < 2.0)
    throw ConfigError("field 'double_well.A' must be >= 2 for electric-field runs");
  return [=](RunOutput& out) {
    ProtocolConfig pc = parse::protocol(num);
    pc.trajectory_sample = sample;
    const auto res = run_protocol(init, s, dw, t3, pc);
    CsvTable t({"t", "schedule_value", "mag_plus", "mag_minus", "phase_diff"});
    for (const auto& p : res.trajectory) t.row() << p.t << p.schedule_value << p.mag_plus << p.mag_minus << p.phase_diff;
    out.write_csv("trajectory.csv", t);
    if (!profile_times.empty()) {
      auto state = initial_state(init, s, dw, pc);
      std::vector<std::vector<double>> cols;
      PropagationOptions opt;
      opt.dt = num.dt;
      for (double tp : profile_times) {
        if (tp > state.time()) state = propagate(state, detail::driven(s, dw), tp, opt);
        std::vector<double> col(state.size());
        for (std::size_t i = 0; i < state.size(); ++i) col[i] = std::abs(state[i]);
        cols.push_back(std::move(col));
      }
      std::vector<std::string> header{"x"};
      for (double tp : profile_times) header.push_back("abs_psi_t" + fmt(tp));
      CsvTable prof(header);
      for (std::size_t i = 0; i < state.size(); ++i) {
        auto& row = prof.row() << state.grid().x(i);
        for (const auto& col : cols) row << col[i];
      }
      out.write_csv("profiles.csv", prof);
    }
    VerbResult r;
    r.summary = detail_verbs::protocol_json(res);
    r.summary["t3"] = t3;
    r.warnings = res.warnings;
    return r;
  };
}

inline Runner prepare_phase_gate(const Json& c) {
  const auto num = parse::numerics(c);
  const auto dw = parse::double_well(c);
  if (dw.A < 2.5) throw ConfigError("field 'double_well.A' must be >= 2.5 for phase-gate");
  PhaseGateConfig pg;
  pg.protocol = parse::protocol(num);
  pg.ramp = get_positive(c, "phase_gate.ramp");
  pg.tail = get_positive(c, "phase_gate.tail");
  pg.sample = get_positive(c, "phase_gate.sample");
  const double F0 = get_number(c, "phase_gate.F0");
  const double t1 = get_positive(c, "phase_gate.t1");
  const double t2 = get_number(c, "phase_gate.t2");
  if (t2 < t1) throw ConfigError("field 'phase_gate.t2' must be >= phase_gate.t1");
  const Side init = parse::side(c, "phase_gate.initial");
  return [=](RunOutput& out) {
    const auto res = phase_gate_run(F0, t1, t2, dw, pg, init);
    const PulseSchedule s{ScheduleKind::kElectricField, t1, t2, pg.ramp, F0};
    CsvTable t({"t", "field", "theta"});
    for (const auto& [tt, th] : res.theta_trace) t.row() << tt << schedule_value(s, tt) << th;
    out.write_csv("theta.csv", t);
    VerbResult r;
    // First-order estimate: psi_+- shifts by +-A F0 E_u, so theta = 2 A F0 E_u (t2 - t1).
    const double first_order = side_sign(init) * 2.0 * dw.A * F0 * field_unit(dw.A) * (t2 - t1);
    r.summary = {{"theta", res.theta},
                 {"magnitude_change", res.magnitude_change},
                 {"norm_drift", res.norm_drift},
                 {"first_order_theta", first_order},
                 {"F0_energy_units", F0 * field_unit(dw.A)}};
    r.warnings = res.warnings;
    return r;
  };
}

inline Runner prepare_gate_tomography(const Json& c) {
  const auto num = parse::numerics(c);
  const auto dw = parse::double_well(c);
  const auto s = parse::schedule(c);
  const std::string expected = resolve(c, "tomography.expected").is_string()
                                   ? resolve(c, "tomography.expected").get<std::string>()
                                   : std::string();
  try {
    (void)ideal_gate(expected);
  } catch (const ConfigError&) {
    throw ConfigError("field 'tomography.expected' must name a single-qubit gate without angle");
  }
  if (ideal_gate(expected).rows() != 2) throw ConfigError("field 'tomography.expected' must be a single-qubit gate");
  const double t3 = get_optional_number(c, "tomography.t3").value_or(s.t2 + kDefaultSettleTime);
  if (t3 < s.t2 + kMinSettleTime) throw ConfigError("field 'tomography.t3' must be >= schedule.t2 + 10");
  const double A_basis = s.kind == ScheduleKind::kWellSeparation ? s.amplitude : dw.A;
  if (A_basis < 2.0) throw ConfigError("qubit basis requires a well separation >= 2");
  return [=](RunOutput& out) {
    const ProtocolConfig pc = parse::protocol(num);
    const auto plus = run_protocol(Side::kPlus, s, dw, t3, pc);
    const auto minus = run_protocol(Side::kMinus, s, dw, t3, pc);
    const auto basis = qubit_basis(A_basis, plus.terminal_state.grid());
    const auto g = reconstruct_gate(plus, minus, basis);
    CsvTable t({"row", "col", "re", "im", "abs"});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t.row() << i << j << g.matrix(i, j).real() << g.matrix(i, j).imag() << std::abs(g.matrix(i, j));
    out.write_csv("gate_matrix.csv", t);
    VerbResult r;
    Json fids = Json::object();
    for (const char* name : {"I", "X", "Z", "SQRT_NOT+", "SQRT_NOT-", "H", "T"})
      fids[name] = fidelity(ideal_gate(name), g.matrix);
    r.summary = {{"matrix", matrix_json(g.matrix)},
                 {"leakage", {g.leakage[0], g.leakage[1]}},
                 {"reliable", g.reliable},
                 {"unitarity_error", unitarity_error(g.matrix)},
                 {"expected", expected},
                 {"fidelity_expected", fidelity(ideal_gate(expected), g.matrix)},
                 {"fidelities", fids}};
    if (!g.reliable) r.warnings.push_back("leakage above 0.05: two-level description not reliable for this run");
    for (const auto& w : plus.warnings) r.warnings.push_back("plus run: " + w);
    for (const auto& w : minus.warnings) r.warnings.push_back("minus run: " + w);
    return r;
  };
}

inline Runner prepare_two_qubit(const Json& c) {
  const auto p = parse::coupling(c);
  const auto n = get_count(c, "two_qubit.landscape_points", 16);
  if (n > kMaxLandscapeNodes) throw ConfigError("field 'two_qubit.landscape_points' must be <= 512");
  const auto hw_opt = get_optional_number(c, "two_qubit.half_width");
  const double hw = hw_opt.value_or(default_half_width(p.a));
  if (!(hw > p.a)) throw ConfigError("field 'two_qubit.half_width' must exceed coupling.a");
  const bool verify = get_bool(c, "two_qubit.verify");
  const double t = get_positive(c, "two_qubit.t");
  const auto vn = get_count(c, "two_qubit.verify_points", 16);
  const auto num = parse::numerics(c);
  if (verify) {
    if (vn > kMaxPhaseModelNodes || t > kMaxPhaseModelTime)
      throw ConfigError("fields 'two_qubit.verify_points' <= 256 and 'two_qubit.t' <= 5 are required; "
                        "try verify_points = 256, t = 5");
    if (p.a < 2.5) throw ConfigError("field 'coupling.a' must be >= 2.5 when two_qubit.verify is set");
  }
  return [=](RunOutput& out) {
    const auto dw = matching_pair(p);
    const auto corners = corner_energies(p);
    const SpatialGrid grid(-hw, hw, n);
    const auto land = landscape_2d(p, dw, grid);
    CsvTable lt({"x1", "x2", "V"});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) lt.row() << grid.x(i) << grid.x(j) << land.at(i, j);
    out.write_csv("landscape.csv", lt);
    const auto minima = landscape_minima(land, p, dw);
    CsvTable mt({"sigma1", "sigma2", "grid_x1", "grid_x2", "grid_value", "x1", "x2", "value", "corner_value",
                 "relaxation_bound"});
    for (const auto& m : minima)
      mt.row() << m.sigma1 << m.sigma2 << m.grid_x1 << m.grid_x2 << m.grid_value << m.x1 << m.x2 << m.value
               << m.corner_value << m.relaxation_bound;
    out.write_csv("minima.csv", mt);
    VerbResult r;
    r.summary = {{"U0", corners.U0},
                 {"E_plus", corners.E_plus},
                 {"E_minus", corners.E_minus},
                 {"EX", corners.EX},
                 {"EX_rel_error_plus", corners.rel_error_plus},
                 {"EX_rel_error_minus", corners.rel_error_minus},
                 {"ising_gate_time", corners.EX > 0.0 ? Json(ising_gate_time(corners.EX)) : Json(nullptr)}};
    if (verify) {
      PhaseModelConfig pc;
      pc.n_points = vn;
      pc.dt = num.dt;
      pc.parallelism = num.parallel;
      const auto rep = verify_phase_model_2d(p, dw, t, pc);
      Json branches = Json::array();
      for (const auto& b : rep.branches)
        branches.push_back({{"sigma1", b.sigma1},
                            {"sigma2", b.sigma2},
                            {"energy", b.energy},
                            {"model_phase", b.model_phase},
                            {"measured_phase", b.measured_phase},
                            {"phase_error", b.phase_error},
                            {"magnitude_change", b.magnitude_change},
                            {"norm_drift", b.norm_drift}});
      Json report = {{"t", rep.t},
                     {"n_points", rep.n_points},
                     {"dt", rep.dt},
                     {"branches", branches},
                     {"max_phase_error_rel", rep.max_phase_error_rel},
                     {"max_magnitude_change", rep.max_magnitude_change},
                     {"assumption", rep.assumption}};
      out.write_json("phase_model.json", report);
      r.summary["phase_model"] = {{"max_phase_error_rel", rep.max_phase_error_rel},
                                  {"max_magnitude_change", rep.max_magnitude_change}};
      r.warnings.push_back(rep.assumption);
    }
    return r;
  };
}

inline Runner prepare_mechanics(const Json& c) {
  const auto g = parse::plate(c);
  const auto samples = get_count(c, "mechanics.samples", 3);
  return [=](RunOutput& out) {
    const auto fit = mechanics::quartic_fit(g);
    const double span = std::min(1.5 * fit.a_fit, 0.99 * g.y0);
    CsvTable t({"x0", "L", "V", "V_fit"});
    for (std::size_t i = 0; i < samples; ++i) {
      const double x = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(samples - 1);
      const double f = (x * x - fit.a_fit * fit.a_fit);
      t.row() << x << mechanics::arc_length(g, x) << mechanics::hooke_potential(g, x)
              << fit.lambda_fit * f * f + fit.V0;
    }
    out.write_csv("mechanics.csv", t);
    VerbResult r;
    r.summary = {{"a_fit", fit.a_fit},
                 {"lambda_fit", fit.lambda_fit},
                 {"V0", fit.V0},
                 {"max_residual", fit.max_residual},
                 {"barrier_height", fit.barrier_height},
                 {"residual_over_barrier", fit.max_residual / fit.barrier_height},
                 {"printed_lambda", fit.printed_lambda},
                 {"printed_a", fit.printed_a},
                 {"lambda_discrepancy", fit.lambda_discrepancy},
                 {"a_discrepancy", fit.a_discrepancy}};
    return r;
  };
}

inline Runner prepare_feasibility(const Json& c) {
  auto range = [&](const char* path) {
    const auto v = get_numbers(c, path);
    if (v.size() != 2 || !(v[0] > 0.0) || v[1] < v[0])
      throw ConfigError(std::string("field '") + path + "' must be [lo, hi] with 0 < lo <= hi");
    return mechanics::FeasibilityRange{v[0], v[1]};
  };
  mechanics::FeasibilityInput in;
  in.mass = range("feasibility.mass");
  in.length = range("feasibility.length");
  in.kappa = range("feasibility.kappa");
  in.samples = static_cast<int>(get_count(c, "feasibility.samples", 1));
  in.compression = get_number(c, "feasibility.compression");
  if (!(in.compression > 0.0 && in.compression < 1.0))
    throw ConfigError("field 'feasibility.compression' must lie in (0, 1)");
  in.boundary = get_choice(c, "feasibility.boundary", {"fixed", "free"}) == "fixed" ? mechanics::Boundary::kFixed
                                                                                    : mechanics::Boundary::kFree;
  return [=](RunOutput& out) {
    const auto rows = mechanics::feasibility_report(in);
    CsvTable t({"mass", "length", "kappa", "lambda_SI", "a_SI", "x_u", "t_u", "frequency", "frequency_spring",
                "length_ok", "displacement_ok", "mass_ok", "frequency_ok", "candidate"});
    std::size_t candidates = 0;
    for (const auto& r : rows) {
      t.row() << r.mass << r.length << r.kappa << r.lambda_SI << r.a_SI << r.x_u << r.t_u << r.frequency
              << r.frequency_spring << r.length_ok << r.displacement_ok << r.mass_ok << r.frequency_ok << r.candidate;
      candidates += r.candidate ? 1 : 0;
    }
    out.write_csv("feasibility.csv", t);
    VerbResult res;
    res.summary = {{"rows", rows.size()}, {"candidates", candidates}};
    return res;
  };
}

inline Runner prepare_convergence(const Json& c) {
  const double A = get_positive(c, "convergence.A");
  const auto grids = resolve(c, "convergence.grid_points");
  std::vector<std::size_t> ns;
  if (!grids.is_array()) throw ConfigError("field 'convergence.grid_points' must be an array of integers");
  for (const auto& v : grids) {
    if (!v.is_number_integer() || v.get<long long>() < 16)
      throw ConfigError("field 'convergence.grid_points' must hold integers >= 16");
    ns.push_back(v.get<std::size_t>());
  }
  const auto dts = get_numbers(c, "convergence.time_steps");
  const double t_end = get_positive(c, "convergence.t_end");
  const auto levels = get_count(c, "convergence.levels", 1);
  const auto pn = get_count(c, "convergence.propagation_points", 16);
  if (ns.size() < 3) throw ConfigError("field 'convergence.grid_points' needs at least three entries");
  for (std::size_t i = 0; i + 1 < ns.size(); ++i)
    if (ns[i + 1] != 2 * ns[i] - 1) throw ConfigError("field 'convergence.grid_points' must satisfy n_{i+1} = 2 n_i - 1");
  if (dts.size() < 3) throw ConfigError("field 'convergence.time_steps' needs at least three entries");
  for (std::size_t i = 0; i + 1 < dts.size(); ++i)
    if (!(dts[i] > 0.0) || std::abs(dts[i + 1] - 0.5 * dts[i]) > 1e-15 * dts[i])
      throw ConfigError("field 'convergence.time_steps' must halve successively");
  if (levels > ns.front() / 4) throw ConfigError("field 'convergence.levels' is too large for the coarsest grid");
  return [=](RunOutput& out) {
    const auto g = grid_convergence(A, ns, levels);
    std::vector<std::string> header{"n_points", "spacing"};
    for (std::size_t l = 0; l < levels; ++l) header.push_back("E" + std::to_string(l));
    CsvTable gt(header);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      auto& row = gt.row() << ns[i] << g.spacing[i];
      for (double e : g.energies[i]) row << e;
    }
    out.write_csv("grid_convergence.csv", gt);
    CsvTable rt({"level", "pair", "ratio"});
    for (std::size_t l = 0; l < levels; ++l)
      for (std::size_t k = 0; k < g.ratios[l].size(); ++k) rt.row() << l << k << g.ratios[l][k];
    out.write_csv("grid_ratios.csv", rt);
    const auto tc = time_step_convergence(A, dts, t_end, pn);
    CsvTable tt({"dt", "re", "im", "magnitude", "phase", "norm_drift", "ratio"});
    for (std::size_t i = 0; i < tc.dt.size(); ++i)
      tt.row() << tc.dt[i] << tc.probe[i].real() << tc.probe[i].imag() << tc.magnitude[i] << tc.phase[i]
               << tc.norm_drift[i] << (i < tc.ratios.size() ? tc.ratios[i] : NAN);
    out.write_csv("time_convergence.csv", tt);
    VerbResult r;
    Json gr = Json::array();
    for (const auto& lv : g.ratios) gr.push_back(to_json(lv));
    r.summary = {{"grid_ratios", gr}, {"time_ratios", to_json(tc.ratios)}};
    return r;
  };
}

inline Runner prepare(const std::string& verb, const Json& config);

inline Runner prepare_sweep(const Json& c) {
  const std::string verb = get_choice(c, "sweep.verb", {"spectrum", "wavefunctions", "gate-search", "gate-run",
                                                          "phase-gate", "gate-tomography", "two-qubit", "mechanics",
                                                          "feasibility", "convergence"});
  const Json& axis_node = resolve(c, "sweep.axis");
  if (!axis_node.is_string()) throw ConfigError("field 'sweep.axis' must be a parameter path");
  const std::string axis = axis_node.get<std::string>();
  if (axis.rfind("sweep", 0) == 0) throw ConfigError("field 'sweep.axis' cannot point into the sweep section");
  const auto values = get_numbers(c, "sweep.values");
  if (values.empty()) throw ConfigError("field 'sweep.values' must not be empty");
  if (!resolve(c, axis).is_number() && !resolve(c, axis).is_null())
    throw ConfigError("field 'sweep.axis' must name a numeric parameter");
  const auto num = parse::numerics(c);
  std::vector<Json> configs;
  std::vector<Runner> runners;
  for (double v : values) {
    Json child = c;
    set_path(child, axis, v);
    runners.push_back(prepare(verb, child));
    configs.push_back(std::move(child));
  }
  return [=](RunOutput& out) {
    struct Outcome {
      std::string status;
      int exit_code;
      std::string dir;
      std::string record_digest;
      std::string message;
    };
    const auto outcomes = parallel_map(values.size(), num.parallel, [&](std::size_t i) {
      const std::string name = std::to_string(i) + "_" + axis + "=" + fmt(values[i]);
      RunOutput child(out.dir() / name);
      Outcome o{"ok", 0, name, "", ""};
      VerbResult res;
      try {
        res = runners[i](child);
        child.write_json("result.json", res.summary);
      } catch (const ConfigError& e) {
        res.status = "failed";
        res.exit_code = 2;
        res.warnings.push_back(e.what());
      } catch (const std::exception& e) {
        res.status = "failed";
        res.exit_code = 3;
        res.warnings.push_back(e.what());
      }
      const Json rec = child.finish(verb, configs[i], res.status, res.warnings);
      o.status = res.status;
      o.exit_code = res.exit_code;
      o.record_digest = sha256_hex(rec["outputs"].dump());
      if (res.exit_code != 0 && !res.warnings.empty()) o.message = res.warnings.back();
      return o;
    });
    CsvTable t({"index", "value", "status", "exit_code", "dir", "manifest_sha256", "message"});
    VerbResult r;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& o = outcomes[i];
      t.row() << i << values[i] << o.status << o.exit_code << o.dir << o.record_digest << o.message;
      if (o.exit_code != 0) ++failed;
    }
    out.write_csv("index.csv", t);
    r.summary = {{"verb", verb}, {"axis", axis}, {"runs", values.size()}, {"failed", failed}};
    if (failed) {
      r.status = "partial";
      r.exit_code = 3;
    }
    return r;
  };
}

inline Runner prepare(const std::string& verb, const Json& config) {
  if (verb == "spectrum") return prepare_spectrum(config);
  if (verb == "wavefunctions") return prepare_wavefunctions(config);
  if (verb == "gate-search") return prepare_gate_search(config);
  if (verb == "gate-run") return prepare_gate_run(config);
  if (verb == "phase-gate") return prepare_phase_gate(config);
  if (verb == "gate-tomography") return prepare_gate_tomography(config);
  if (verb == "two-qubit") return prepare_two_qubit(config);
  if (verb == "mechanics") return prepare_mechanics(config);
  if (verb == "feasibility") return prepare_feasibility(config);
  if (verb == "convergence") return prepare_convergence(config);
  if (verb == "sweep") return prepare_sweep(config);
  throw ConfigError("unknown verb '" + verb + "'");
}

}  // namespace nemsq::app
