#include <iostream>

#include <CLI11.hpp>

#include "stackelberg/experiment.hpp"

namespace ex = stackelberg::experiment;
using stackelberg::Json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string scenario;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--scenario", f.scenario, "preset name");
  cmd->add_option("--set", f.sets, "override, e.g. --set filter.num_particles=100")->allow_extra_args(false);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--workers", f.workers, "worker threads");
  cmd->add_option("--out", f.out, "output directory");
}

Json flag_layer(const CommonFlags& f) {
  Json j = Json::object();
  if (!f.scenario.empty()) j["scenario"]["name"] = f.scenario;
  if (f.seed) j["run"]["seed"] = *f.seed;
  if (f.workers) j["run"]["workers"] = *f.workers;
  if (!f.out.empty()) j["run"]["out"] = f.out;
  return j;
}

Json file_layer(const CommonFlags& f) {
  return f.config_path.empty() ? Json::object() : stackelberg::load_json_file(f.config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg leadership filter experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string mode;
  std::optional<int> reps;
  bool allow_nonconverged = false;
  std::optional<double> duration;
  auto* run_cmd = app.add_subcommand("run", "solve, filter or Monte Carlo run");
  add_common(run_cmd, run_flags);
  run_cmd->add_option("--mode", mode, "solve | filter | montecarlo-solve | montecarlo-filter");
  run_cmd->add_option("--reps", reps, "Monte Carlo repetitions");
  run_cmd->add_option("--duration", duration, "truncate filter runs to this many seconds");
  run_cmd->add_flag("--allow-nonconverged", allow_nonconverged, "exit 0 even if a solve does not converge");

  CommonFlags verify_flags;
  std::string trace;
  auto* verify_cmd = app.add_subcommand("verify", "check a solve trace for consistency and equilibrium");
  add_common(verify_cmd, verify_flags);
  verify_cmd->add_option("--trace", trace, "trace.csv from a solve run")->required();

  std::vector<std::string> summaries;
  auto* timing_cmd = app.add_subcommand("timing", "per-iteration and per-cycle timing table");
  timing_cmd->add_option("summaries", summaries, "summary.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*timing_cmd) {
      std::vector<std::vector<ex::RepSummary>> loaded;
      for (const auto& p : summaries) loaded.push_back(ex::load_summary(p));
      ex::print_timing(std::cout, ex::timing_report(loaded));
      return 0;
    }
    Json resolved;
    if (*run_cmd) {
      Json flags = flag_layer(run_flags);
      if (!mode.empty()) flags["run"]["mode"] = mode;
      if (mode == "verify") throw stackelberg::ConfigError("run.mode", "use the verify subcommand");
      if (reps) flags["run"]["reps"] = *reps;
      if (duration) flags["run"]["duration_limit"] = *duration;
      if (allow_nonconverged) flags["run"]["allow_nonconverged"] = true;
      resolved = ex::resolve_config(file_layer(run_flags), run_flags.sets, flags);
    } else {
      Json flags = flag_layer(verify_flags);
      flags["run"]["mode"] = "verify";
      flags["run"]["trace"] = trace;
      resolved = ex::resolve_config(file_layer(verify_flags), verify_flags.sets, flags);
    }
    return ex::run(resolved, std::cout);
  } catch (const stackelberg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
