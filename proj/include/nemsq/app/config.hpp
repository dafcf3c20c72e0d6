#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nemsq/error.hpp"

namespace nemsq::app {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v{"spectrum",        "wavefunctions", "gate-search", "gate-run",
                                          "phase-gate",      "gate-tomography", "two-qubit", "mechanics",
                                          "feasibility",     "sweep",         "convergence"};
  return v;
}

// Every recognised configuration key with its default. Sections not used by
// a verb are ignored by it; unknown keys are rejected.
inline Json default_config() {
  return Json::parse(R"({
    "double_well": {"A": 3.0, "F": 0.0},
    "numerics": {"n_points": 2049, "dt": 0.0005, "parallel": 1},
    "spectrum": {"variable": "A", "min": 0.0, "max": 3.0, "points": 61, "k": 6},
    "wavefunctions": {"k": 4},
    "schedule": {"kind": "well_separation", "t1": 20.0, "t2": 27.02, "ramp": 0.2, "amplitude": 3.0},
    "gate_search": {"target": "sqrt_not", "t2_min": 24.0, "t2_max": 32.0, "step": 0.05,
                    "tolerance": 1e-05, "initial": "plus"},
    "gate_run": {"t3": null, "initial": "plus", "sample": 0.05, "profile_times": []},
    "phase_gate": {"F0": 0.05, "t1": 2.0, "t2": 6.0, "ramp": 0.2, "tail": 2.0, "initial": "plus",
                   "sample": 0.01},
    "tomography": {"expected": "SQRT_NOT+", "t3": null},
    "coupling": {"eps0S": 2.0, "X_cap": 10.0, "V1": 10.0, "a": 2.0},
    "two_qubit": {"landscape_points": 201, "half_width": null, "verify": false, "t": 5.0,
                  "verify_points": 256},
    "mechanics": {"L0": 1.0, "y0": 0.9, "kappa": 1.0, "boundary": "fixed", "samples": 201},
    "feasibility": {"mass": [1e-21, 1e-14], "length": [1e-06, 0.0001], "kappa": [0.01, 100.0],
                    "samples": 3, "compression": 0.9, "boundary": "fixed"},
    "sweep": {"verb": "spectrum", "axis": "double_well.A", "values": []},
    "convergence": {"A": 3.0, "grid_points": [513, 1025, 2049, 4097], "time_steps": [0.002, 0.001, 0.0005],
                    "t_end": 5.0, "levels": 4, "propagation_points": 1025}
  })");
}

// Field names are reported as dotted paths.
inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const auto end = dot == std::string_view::npos ? path.size() : dot;
    if (end == start) throw ConfigError("malformed parameter path '" + std::string(path) + "'");
    parts.emplace_back(path.substr(start, end - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

inline Json& resolve(Json& cfg, std::string_view path) {
  Json* node = &cfg;
  for (const auto& part : split_path(path)) {
    if (!node->is_object() || !node->contains(part))
      throw ConfigError("unknown configuration field '" + std::string(path) + "'");
    node = &(*node)[part];
  }
  return *node;
}

inline const Json& resolve(const Json& cfg, std::string_view path) {
  return resolve(const_cast<Json&>(cfg), path);
}

// Parses an override value: JSON literal when it parses, plain string otherwise.
inline Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

inline void set_path(Json& cfg, std::string_view path, Json value) { resolve(cfg, path) = std::move(value); }

// Recursively merges `patch` into `base`, rejecting keys absent from base.
inline void merge(Json& base, const Json& patch, const std::string& prefix = "") {
  if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown configuration field '" + path + "'");
    Json& slot = base[key];
    if (slot.is_object()) {
      if (!value.is_object()) throw ConfigError("configuration field '" + path + "' must be an object");
      merge(slot, value, path);
    } else {
      slot = value;
    }
  }
}

inline Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("configuration file '" + path + "' is not valid JSON: " + e.what());
  }
}

// Typed accessors that name the offending field on failure.
inline double get_number(const Json& cfg, std::string_view path) {
  const Json& v = resolve(cfg, path);
  if (!v.is_number()) throw ConfigError("field '" + std::string(path) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("field '" + std::string(path) + "' must be finite");
  return d;
}

inline std::optional<double> get_optional_number(const Json& cfg, std::string_view path) {
  if (resolve(cfg, path).is_null()) return std::nullopt;
  return get_number(cfg, path);
}

inline double get_positive(const Json& cfg, std::string_view path) {
  const double d = get_number(cfg, path);
  if (!(d > 0.0)) throw ConfigError("field '" + std::string(path) + "' must be > 0");
  return d;
}

inline std::size_t get_count(const Json& cfg, std::string_view path, std::size_t min_value = 1) {
  const Json& v = resolve(cfg, path);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value))
    throw ConfigError("field '" + std::string(path) + "' must be an integer >= " + std::to_string(min_value));
  return v.get<std::size_t>();
}

inline bool get_bool(const Json& cfg, std::string_view path) {
  const Json& v = resolve(cfg, path);
  if (!v.is_boolean()) throw ConfigError("field '" + std::string(path) + "' must be true or false");
  return v.get<bool>();
}

inline std::string get_choice(const Json& cfg, std::string_view path, const std::vector<std::string>& allowed) {
  const Json& v = resolve(cfg, path);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    for (const auto& a : allowed)
      if (s == a) return s;
  }
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
  throw ConfigError("field '" + std::string(path) + "' must be one of: " + list);
}

inline std::vector<double> get_numbers(const Json& cfg, std::string_view path) {
  const Json& v = resolve(cfg, path);
  if (!v.is_array()) throw ConfigError("field '" + std::string(path) + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("field '" + std::string(path) + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace nemsq::app
