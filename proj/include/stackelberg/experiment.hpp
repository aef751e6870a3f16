#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stackelberg/config.hpp"
#include "stackelberg/scenarios.hpp"

namespace stackelberg::experiment {

// ---------------------------------------------------------------------------
// Versioned CSV tables.

inline constexpr int kCsvVersion = 1;

struct Table {
  std::string kind;  // "solve", "filter", "iterations", ...
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// First line "#slf-trace v<version> kind=<kind>", then a header row, then
/// numbers in shortest round-trip form.
void write_table(const std::string& path, const Table& table);
/// Throws ConfigError on an unknown version or a malformed file.
Table read_table(const std::string& path);
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Summaries.

struct RepSummary {
  int rep = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::string status;
  int iterations = 0;
  std::vector<double> iteration_seconds;
  std::array<double, 2> objectives{};
  std::vector<double> metric_history;
  std::vector<double> cycle_seconds;  // filter mode
};

struct Aggregate {
  double mean_iterations = 0.0;
  double std_iterations = 0.0;
  double convergence_rate = 0.0;
  std::array<std::vector<double>, 3> metric_bands;  // 10th, 50th, 90th percentile per iteration
};

/// Population statistics, so a single repetition reports std 0.
Aggregate aggregate(const std::vector<RepSummary>& reps);
/// Linear interpolation between order statistics; q in percent.
double percentile(std::vector<double> values, double q);

Json summary_json(const std::string& scenario, const std::string& mode, const std::vector<RepSummary>& reps,
                  const Json& extra = Json::object());
/// Parses a summary and recomputes every aggregate from the per-repetition
/// rows; throws ConfigError on any disagreement.
std::vector<RepSummary> load_summary(const std::string& path);

struct TimingStats {
  int samples = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct TimingReport {
  TimingStats iteration;
  TimingStats filter_cycle;
};

TimingReport timing_report(const std::vector<std::vector<RepSummary>>& summaries);
void print_timing(std::ostream& out, const TimingReport& report);

// ---------------------------------------------------------------------------
// Runs.

/// Defaults of the "run" section.
Json default_run_section();

/// preset defaults <- config file <- --set assignments <- explicit flags.
/// The scenario name may come from any layer.
Json resolve_config(const Json& file_config, const std::vector<std::string>& assignments, const Json& flags);

/// Per-repetition seed; independent of worker count.
std::uint64_t rep_seed(std::uint64_t master, int rep);

/// Executes the run described by a resolved tree and writes artifacts.
/// Returns the process exit status.
int run(const Json& resolved, std::ostream& log);

struct VerifyReport {
  double max_residual = 0.0;
  int worst_residual_timestep = -1;
  PerturbationReport equilibrium;
  bool passed = false;
};

struct VerifySettings {
  double residual_tol = 1e-8;
  double improvement_tol = 1e-3;
  double radius = 0.05;
  int samples = 100;
  int leader_samples = 0;
  int timesteps = 10;
  std::uint64_t seed = 0;
};

/// Re-simulates a solve trace, then checks sampled single-stage follower
/// (and optionally leader) deviations. Later stages react through the
/// feedback gains of the LQ game expanded about the trace.
VerifyReport verify_trace(const Scenario& scenario, const Table& trace, const VerifySettings& settings);
VerifyReport verify_solution(const Scenario& scenario, const StateSequence& states, const JointControls& controls,
                             const VerifySettings& settings);
void print_verify(std::ostream& out, const VerifyReport& report, const VerifySettings& settings);

/// Trace tables.
Table solve_trace(const Scenario& scenario, const StateSequence& states, const JointControls& controls);

}  // namespace stackelberg::experiment
