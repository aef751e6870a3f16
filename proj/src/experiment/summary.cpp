#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "stackelberg/experiment.hpp"

namespace stackelberg::experiment {
namespace {

TimingStats stats(const std::vector<double>& v) {
  TimingStats s;
  s.samples = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / v.size());
  return s;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

bool close(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i])) return false;
  return true;
}

Json to_json(const RepSummary& r) {
  return Json{{"rep", r.rep},
              {"seed", r.seed},
              {"converged", r.converged},
              {"status", r.status},
              {"iterations", r.iterations},
              {"objectives", r.objectives},
              {"iteration_seconds", r.iteration_seconds},
              {"metric_history", r.metric_history},
              {"cycle_seconds", r.cycle_seconds}};
}

RepSummary rep_from(const Json& j, const std::string& path) {
  RepSummary r;
  r.rep = get<int>(j, "rep", path);
  r.seed = get<std::uint64_t>(j, "seed", path);
  r.converged = get<bool>(j, "converged", path);
  r.status = get<std::string>(j, "status", path);
  r.iterations = get<int>(j, "iterations", path);
  r.objectives = get<std::array<double, 2>>(j, "objectives", path);
  r.iteration_seconds = get<std::vector<double>>(j, "iteration_seconds", path);
  r.metric_history = get<std::vector<double>>(j, "metric_history", path);
  r.cycle_seconds = get<std::vector<double>>(j, "cycle_seconds", path);
  return r;
}

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

Aggregate aggregate(const std::vector<RepSummary>& reps) {
  Aggregate a;
  if (reps.empty()) return a;
  std::vector<double> iters;
  std::size_t longest = 0;
  int converged = 0;
  for (const auto& r : reps) {
    iters.push_back(r.iterations);
    converged += r.converged;
    longest = std::max(longest, r.metric_history.size());
  }
  const TimingStats s = stats(iters);
  a.mean_iterations = s.mean;
  a.std_iterations = s.std;
  a.convergence_rate = static_cast<double>(converged) / reps.size();
  // Bands at iteration k use the repetitions still running at k.
  const double qs[3] = {10.0, 50.0, 90.0};
  for (std::size_t k = 0; k < longest; ++k) {
    std::vector<double> col;
    for (const auto& r : reps)
      if (k < r.metric_history.size()) col.push_back(r.metric_history[k]);
    for (int b = 0; b < 3; ++b) a.metric_bands[b].push_back(percentile(col, qs[b]));
  }
  return a;
}

Json summary_json(const std::string& scenario, const std::string& mode, const std::vector<RepSummary>& reps,
                  const Json& extra) {
  const Aggregate a = aggregate(reps);
  Json rows = Json::array();
  for (const auto& r : reps) rows.push_back(to_json(r));
  Json j{{"format", "slf-summary"},
         {"version", 1},
         {"scenario", scenario},
         {"mode", mode},
         {"repetitions", rows},
         {"aggregate",
          {{"mean_iterations", a.mean_iterations},
           {"std_iterations", a.std_iterations},
           {"convergence_rate", a.convergence_rate},
           {"metric_p10", a.metric_bands[0]},
           {"metric_p50", a.metric_bands[1]},
           {"metric_p90", a.metric_bands[2]}}}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

std::vector<RepSummary> load_summary(const std::string& path) {
  const Json j = load_json_file(path);
  if (get<std::string>(j, "format", "") != "slf-summary") throw ConfigError("format", path + ": not a summary");
  if (get<int>(j, "version", "") != 1) throw ConfigError("version", path + ": unsupported summary version");
  std::vector<RepSummary> reps;
  const Json& rows = j.at("repetitions");
  for (std::size_t i = 0; i < rows.size(); ++i) reps.push_back(rep_from(rows[i], "repetitions." + std::to_string(i)));

  const Aggregate a = aggregate(reps);
  const Json& g = j.at("aggregate");
  auto check = [&](bool ok, const std::string& key) {
    if (!ok) throw ConfigError("aggregate." + key, path + ": does not match the repetition rows");
  };
  check(close(a.mean_iterations, get<double>(g, "mean_iterations", "aggregate")), "mean_iterations");
  check(close(a.std_iterations, get<double>(g, "std_iterations", "aggregate")), "std_iterations");
  check(close(a.convergence_rate, get<double>(g, "convergence_rate", "aggregate")), "convergence_rate");
  check(close(a.metric_bands[0], get<std::vector<double>>(g, "metric_p10", "aggregate")), "metric_p10");
  check(close(a.metric_bands[1], get<std::vector<double>>(g, "metric_p50", "aggregate")), "metric_p50");
  check(close(a.metric_bands[2], get<std::vector<double>>(g, "metric_p90", "aggregate")), "metric_p90");
  return reps;
}

TimingReport timing_report(const std::vector<std::vector<RepSummary>>& summaries) {
  std::vector<double> it, cyc;
  for (const auto& reps : summaries)
    for (const auto& r : reps) {
      it.insert(it.end(), r.iteration_seconds.begin(), r.iteration_seconds.end());
      cyc.insert(cyc.end(), r.cycle_seconds.begin(), r.cycle_seconds.end());
    }
  return {stats(it), stats(cyc)};
}

void print_timing(std::ostream& out, const TimingReport& report) {
  auto line = [&](const char* what, const TimingStats& s) {
    out << std::left << std::setw(22) << what << std::right << std::setw(8) << s.samples << std::setw(14)
        << std::scientific << std::setprecision(4) << s.mean << std::setw(14) << s.std << "\n";
  };
  out << std::left << std::setw(22) << "quantity" << std::right << std::setw(8) << "n" << std::setw(14) << "mean [s]"
      << std::setw(14) << "std [s]" << "\n";
  line("solver iteration", report.iteration);
  line("filter cycle", report.filter_cycle);
  out << std::defaultfloat;
}

}  // namespace stackelberg::experiment
