#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nemsq/app/config.hpp"
#include "nemsq/app/output.hpp"
#include "nemsq/app/verbs.hpp"

namespace {

using nemsq::app::Json;

struct Override {
  std::string path;
  std::string flag;
};

// Named shortcuts for frequently changed fields; anything else goes through --set.
const std::vector<Override> kOverrides{
    {"double_well.A", "--A"},           {"double_well.F", "--F"},
    {"numerics.n_points", "--n-points"}, {"numerics.dt", "--dt"},
    {"schedule.t1", "--t1"},            {"schedule.t2", "--t2"},
    {"schedule.ramp", "--ramp"},        {"schedule.amplitude", "--amplitude"},
    {"gate_search.target", "--target"}, {"gate_search.t2_min", "--t2-min"},
    {"gate_search.t2_max", "--t2-max"}, {"gate_search.step", "--step"},
    {"gate_run.t3", "--t3"},            {"phase_gate.F0", "--F0"},
    {"spectrum.points", "--points"},    {"spectrum.k", "--k"},
    {"sweep.verb", "--sweep-verb"},     {"sweep.axis", "--axis"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Buckled-plate NEMS qubit simulator"};
  cli.require_subcommand(1);
  std::string config_path, out_dir;
  unsigned parallel = 0;
  std::vector<std::string> sets;
  std::vector<double> sweep_values;
  std::vector<std::string> override_values(kOverrides.size());

  for (const auto& verb : nemsq::app::verbs()) {
    auto* sub = cli.add_subcommand(verb);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out", out_dir, "output directory (relative paths honour $NEMSQ_OUTPUT_ROOT)");
    sub->add_option("--parallel", parallel, "worker threads for independent runs");
    sub->add_option("--set", sets, "override any field: path=value (JSON literal or string)");
    for (std::size_t i = 0; i < kOverrides.size(); ++i)
      sub->add_option(kOverrides[i].flag, override_values[i], "override " + kOverrides[i].path);
    if (verb == "sweep") sub->add_option("--values", sweep_values, "values for the sweep axis")->delimiter(',');
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string verb = cli.get_subcommands().front()->get_name();

  Json config;
  nemsq::app::Runner runner;
  try {
    config = nemsq::app::default_config();
    if (!config_path.empty()) nemsq::app::merge(config, nemsq::app::load_config_file(config_path));
    for (std::size_t i = 0; i < kOverrides.size(); ++i)
      if (!override_values[i].empty())
        nemsq::app::set_path(config, kOverrides[i].path, nemsq::app::parse_value(override_values[i]));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw nemsq::ConfigError("--set expects path=value, got '" + s + "'");
      nemsq::app::set_path(config, s.substr(0, eq), nemsq::app::parse_value(s.substr(eq + 1)));
    }
    if (parallel > 0) config["numerics"]["parallel"] = parallel;
    if (!sweep_values.empty()) config["sweep"]["values"] = sweep_values;
    runner = nemsq::app::prepare(verb, config);
  } catch (const nemsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  nemsq::app::RunOutput out(nemsq::app::output_directory(out_dir, verb));
  nemsq::app::VerbResult result;
  try {
    result = runner(out);
    out.write_json("result.json", result.summary);
  } catch (const nemsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    result.status = "failed";
    result.exit_code = 2;
    result.warnings.push_back(e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    result.status = "failed";
    result.exit_code = 3;
    result.warnings.push_back(e.what());
  }
  try {
    out.finish(verb, config, result.status, result.warnings);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << result.summary.dump(2) << "\n" << "output: " << out.dir().string() << "\n";
  return result.exit_code;
}
