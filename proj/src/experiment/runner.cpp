#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>

#include "stackelberg/experiment.hpp"

namespace stackelberg::experiment {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kRepStream = 0x7e9;
constexpr std::uint64_t kMeasurementStream = 0x3ea5;
constexpr std::uint64_t kFilterStream = 0xf17e;

const std::vector<std::string>& modes() {
  static const std::vector<std::string> m{"solve", "filter", "montecarlo-solve", "montecarlo-filter", "verify"};
  return m;
}

// Recursive merge without schema checks, used only to discover the
// scenario name before the preset defaults are known.
void overlay(Json& base, const Json& top) {
  if (!top.is_object()) return;
  for (auto it = top.begin(); it != top.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      overlay(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void write_json(const fs::path& p, const Json& j) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

struct RunSettings {
  std::string mode;
  std::uint64_t seed = 0;
  int reps = 1;
  int workers = 1;
  bool allow_nonconverged = false;
  double duration_limit = 0.0;
  std::string trace;
  VerifySettings verify;
};

RunSettings settings_from(const Json& r) {
  const std::string p = "run";
  RunSettings s;
  s.mode = get<std::string>(r, "mode", p);
  if (std::find(modes().begin(), modes().end(), s.mode) == modes().end())
    throw ConfigError("run.mode", "unknown mode '" + s.mode + "'");
  s.seed = get<std::uint64_t>(r, "seed", p);
  s.reps = get<int>(r, "reps", p);
  if (s.reps < 1) throw ConfigError("run.reps", "must be >= 1");
  s.workers = get<int>(r, "workers", p);
  if (s.workers < 1) throw ConfigError("run.workers", "must be >= 1");
  s.allow_nonconverged = get<bool>(r, "allow_nonconverged", p);
  s.duration_limit = get<double>(r, "duration_limit", p);
  if (s.duration_limit < 0.0) throw ConfigError("run.duration_limit", "must be >= 0");
  s.trace = get<std::string>(r, "trace", p);
  const Json& v = r.at("verify");
  s.verify.residual_tol = get<double>(v, "residual_tol", "run.verify");
  s.verify.improvement_tol = get<double>(v, "improvement_tol", "run.verify");
  s.verify.radius = get<double>(v, "radius", "run.verify");
  s.verify.samples = get<int>(v, "samples", "run.verify");
  s.verify.leader_samples = get<int>(v, "leader_samples", "run.verify");
  s.verify.timesteps = get<int>(v, "timesteps", "run.verify");
  s.verify.seed = s.seed;
  return s;
}

fs::path output_dir(const Json& run, const std::string& scenario, const RunSettings& s) {
  std::string out = get<std::string>(run, "out", "run");
  if (out.empty()) {
    const char* root = std::getenv("SLF_OUTPUT_ROOT");
    out = (fs::path(root && *root ? root : "runs") / (scenario + "_" + s.mode + "_" + std::to_string(s.seed))).string();
  }
  fs::create_directories(out);
  return out;
}

struct SolveOutcome {
  SolveResult result;
  RepSummary summary;
};

SolveOutcome solve_rep(const Scenario& sc, std::uint64_t master, int rep) {
  const GameDefinition g = sc.game();
  const Vector x1 = sc.initial_state(master, rep);
  SolveOutcome o;
  o.result = solve(g, x1,
                   zero_controls(g.horizon, sc.model->control_dim(Agent::kOne), sc.model->control_dim(Agent::kTwo)),
                   sc.solver);
  auto& s = o.summary;
  s.rep = rep;
  s.seed = rep_seed(master, rep);
  s.converged = o.result.converged;
  s.status = to_string(o.result.status);
  s.iterations = o.result.iterations;
  s.objectives = o.result.objectives;
  s.metric_history = o.result.metric_history();
  for (const auto& h : o.result.history) s.iteration_seconds.push_back(h.seconds);
  return o;
}

void append_iterations(Table& t, int rep, const SolveResult& r) {
  for (const auto& h : r.history)
    t.rows.push_back({double(rep), double(h.k), h.metric, h.alpha, h.objectives[0], h.objectives[1], h.seconds,
                      double(h.backoffs), double(h.convexified_stages)});
}

Table iterations_table() {
  return {"iterations",
          {"rep", "k", "metric", "alpha", "objective1", "objective2", "seconds", "backoffs", "convexified_stages"},
          {}};
}

struct FilterOutcome {
  GroundTruth truth;
  std::vector<Vector> observed;
  FilterResult filter;
  RepSummary summary;
};

FilterOutcome filter_rep(const Scenario& sc, const RunSettings& s, int rep, int filter_workers) {
  FilterOutcome o;
  o.truth = generate_ground_truth(sc, s.seed, rep);
  const std::uint64_t rs = rep_seed(s.seed, rep);
  o.observed = simulate_measurements(o.truth.states, sc.filter.measurement_noise, stream_seed(rs, 0, kMeasurementStream));
  auto meas = make_measurements(o.truth, o.observed);
  if (s.duration_limit > 0.0) {
    const auto keep = static_cast<std::size_t>(std::floor(s.duration_limit / sc.model->dt() + 1e-9)) + 1;
    if (keep < meas.size()) meas.resize(keep);
  }
  FilterConfig cfg = sc.filter;
  cfg.workers = filter_workers;
  o.filter = run_filter(sc.measurement_model(), meas, cfg, stream_seed(rs, 0, kFilterStream));

  auto& r = o.summary;
  r.rep = rep;
  r.seed = rs;
  r.converged = o.truth.converged;
  r.status = o.truth.status;
  r.iterations = o.truth.iterations;
  r.objectives = o.truth.objectives;
  for (const auto& st : o.filter.steps) r.cycle_seconds.push_back(st.seconds);
  return o;
}

Table filter_trace(const Scenario& sc, const FilterOutcome& o) {
  Table t{"filter", {"t", "time"}, {}};
  const auto labels = sc.model->state_labels();
  for (const auto& l : labels) t.columns.push_back(l);
  for (const auto& l : labels) t.columns.push_back("y_" + l);
  for (int i = 0; i < sc.model->control_dim(Agent::kOne); ++i) t.columns.push_back("u1_" + std::to_string(i));
  for (int i = 0; i < sc.model->control_dim(Agent::kTwo); ++i) t.columns.push_back("u2_" + std::to_string(i));
  for (const auto& l : labels) t.columns.push_back("est_" + l);
  for (const char* c : {"b1", "b2", "ess", "resampled", "uniform_fallback", "nonconverged_solves", "seconds"})
    t.columns.push_back(c);
  for (const auto& st : o.filter.steps) {
    const auto k = static_cast<std::size_t>(st.t);
    std::vector<double> row{double(st.t), st.t * sc.model->dt()};
    for (double v : o.truth.states[k]) row.push_back(v);
    for (double v : o.observed[k]) row.push_back(v);
    for (double v : o.truth.controls[Agent::kOne][k]) row.push_back(v);
    for (double v : o.truth.controls[Agent::kTwo][k]) row.push_back(v);
    for (double v : st.mean_state) row.push_back(v);
    row.insert(row.end(), {st.belief[0], st.belief[1], st.ess, double(st.resampled), double(st.uniform_fallback),
                           double(st.nonconverged_solves), st.seconds});
    t.rows.push_back(std::move(row));
  }
  return t;
}

int run_solve(const Scenario& sc, const RunSettings& s, const fs::path& out, std::ostream& log) {
  const SolveOutcome o = solve_rep(sc, s.seed, 0);
  write_table((out / "trace.csv").string(), solve_trace(sc, o.result.states, o.result.controls));
  Table it = iterations_table();
  append_iterations(it, 0, o.result);
  write_table((out / "iterations.csv").string(), it);
  write_json(out / "summary.json", summary_json(sc.name, s.mode, {o.summary}));
  log << sc.name << ": " << o.summary.status << " after " << o.summary.iterations << " iterations, objectives "
      << o.summary.objectives[0] << ", " << o.summary.objectives[1] << "\n";
  if (!o.result.converged) {
    log << "solver did not converge: " << o.result.message << "\n";
    return s.allow_nonconverged ? 0 : 2;
  }
  return 0;
}

int run_filter_mode(const Scenario& sc, const RunSettings& s, const fs::path& out, std::ostream& log) {
  const FilterOutcome o = filter_rep(sc, s, 0, s.workers);
  write_table((out / "trace.csv").string(), filter_trace(sc, o));
  write_json(out / "summary.json", summary_json(sc.name, s.mode, {o.summary}, Json{{"true_leader", label(sc.leader)}}));
  const auto& last = o.filter.steps.back();
  log << sc.name << ": " << o.filter.steps.size() << " filter steps, final b(H=1) " << last.belief[0]
      << ", true leader " << label(sc.leader) << "\n";
  if (!o.truth.converged) {
    log << "ground-truth solve did not converge (" << o.truth.status << ")\n";
    return s.allow_nonconverged ? 0 : 2;
  }
  return 0;
}

int run_montecarlo_solve(const Scenario& sc, const RunSettings& s, const fs::path& out, std::ostream& log) {
  std::vector<SolveOutcome> outcomes(s.reps);
  parallel_for(s.reps, s.workers, [&](int r) { outcomes[r] = solve_rep(sc, s.seed, r); });
  Table runs{"montecarlo-solve", {"rep", "converged", "iterations", "objective1", "objective2"}, {}};
  Table it = iterations_table();
  std::vector<RepSummary> reps;
  for (int r = 0; r < s.reps; ++r) {
    const auto& o = outcomes[r];
    runs.rows.push_back({double(r), double(o.result.converged), double(o.result.iterations), o.result.objectives[0],
                         o.result.objectives[1]});
    append_iterations(it, r, o.result);
    reps.push_back(o.summary);
  }
  write_table((out / "runs.csv").string(), runs);
  write_table((out / "iterations.csv").string(), it);
  write_json(out / "summary.json", summary_json(sc.name, s.mode, reps));
  const Aggregate a = aggregate(reps);
  log << sc.name << ": " << s.reps << " repetitions, iterations " << a.mean_iterations << " +/- " << a.std_iterations
      << ", converged " << a.convergence_rate * 100.0 << "%\n";
  return 0;
}

int run_montecarlo_filter(const Scenario& sc, const RunSettings& s, const fs::path& out, std::ostream& log) {
  std::vector<FilterOutcome> outcomes(s.reps);
  parallel_for(s.reps, s.workers, [&](int r) { outcomes[r] = filter_rep(sc, s, r, 1); });
  Table beliefs{"montecarlo-filter", {"rep", "t", "time", "b1", "b2", "ess", "resampled"}, {}};
  std::vector<RepSummary> reps;
  std::size_t steps = 0;
  for (int r = 0; r < s.reps; ++r) {
    for (const auto& st : outcomes[r].filter.steps)
      beliefs.rows.push_back({double(r), double(st.t), st.t * sc.model->dt(), st.belief[0], st.belief[1], st.ess,
                              double(st.resampled)});
    reps.push_back(outcomes[r].summary);
    steps = std::max(steps, outcomes[r].filter.steps.size());
  }
  // Mean belief in the true leader at each step, over repetitions.
  const int li = index(sc.leader);
  std::vector<double> mean_true(steps, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    int n = 0;
    for (const auto& o : outcomes)
      if (k < o.filter.steps.size()) mean_true[k] += o.filter.steps[k].belief[li], ++n;
    mean_true[k] /= std::max(n, 1);
  }
  write_table((out / "beliefs.csv").string(), beliefs);
  write_json(out / "summary.json",
             summary_json(sc.name, s.mode, reps, Json{{"true_leader", label(sc.leader)}, {"mean_true_belief", mean_true}}));
  log << sc.name << ": " << s.reps << " repetitions, final mean belief in the true leader "
      << (steps ? mean_true.back() : 0.0) << "\n";
  return 0;
}

int run_verify(const Scenario& sc, const RunSettings& s, const fs::path& out, std::ostream& log) {
  if (s.trace.empty()) throw ConfigError("run.trace", "verify mode needs a trace file");
  const Table trace = read_table(s.trace);
  const VerifyReport rep = verify_trace(sc, trace, s.verify);
  print_verify(log, rep, s.verify);
  write_json(out / "verify.json",
             Json{{"passed", rep.passed},
                  {"max_residual", rep.max_residual},
                  {"worst_residual_timestep", rep.worst_residual_timestep},
                  {"min_follower_change", rep.equilibrium.min_follower_change},
                  {"worst_follower_timestep", rep.equilibrium.worst_follower_timestep},
                  {"min_leader_change", rep.equilibrium.leader_samples ? Json(rep.equilibrium.min_leader_change) : Json()},
                  {"skipped_samples", rep.equilibrium.skipped_samples}});
  return rep.passed ? 0 : 3;
}

}  // namespace

Json default_run_section() {
  return Json{{"mode", "solve"},
              {"seed", 0},
              {"reps", 1},
              {"workers", 1},
              {"out", ""},
              {"allow_nonconverged", false},
              {"duration_limit", 0.0},
              {"trace", ""},
              {"verify",
               {{"residual_tol", 1e-8},
                {"improvement_tol", 1e-3},
                {"radius", 0.05},
                {"samples", 100},
                {"leader_samples", 0},
                {"timesteps", 10}}}};
}

Json resolve_config(const Json& file_config, const std::vector<std::string>& assignments, const Json& flags) {
  if (!file_config.is_null() && !file_config.is_object()) throw ConfigError("", "config must be a JSON object");
  std::vector<Json> layers{file_config};
  for (const auto& a : assignments) layers.push_back(parse_assignment(a));
  layers.push_back(flags);

  Json probe = Json::object();
  for (const auto& l : layers) overlay(probe, l);
  if (!probe.contains("scenario") || !probe["scenario"].contains("name"))
    throw ConfigError("scenario.name", "no scenario given");
  if (!probe["scenario"]["name"].is_string()) throw ConfigError("scenario.name", "expected a string");

  Json resolved = preset_config(probe["scenario"]["name"].get<std::string>());
  resolved["run"] = default_run_section();
  for (const auto& l : layers) resolved = merge_checked(std::move(resolved), l);
  return resolved;
}

std::uint64_t rep_seed(std::uint64_t master, int rep) {
  return stream_seed(master, static_cast<std::uint64_t>(rep), kRepStream);
}

Table solve_trace(const Scenario& sc, const StateSequence& states, const JointControls& controls) {
  Table t{"solve", {"t", "time"}, {}};
  for (const auto& l : sc.model->state_labels()) t.columns.push_back(l);
  const int m1 = sc.model->control_dim(Agent::kOne), m2 = sc.model->control_dim(Agent::kTwo);
  for (int i = 0; i < m1; ++i) t.columns.push_back("u1_" + std::to_string(i));
  for (int i = 0; i < m2; ++i) t.columns.push_back("u2_" + std::to_string(i));
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::vector<double> row{double(k), k * sc.model->dt()};
    for (double v : states[k]) row.push_back(v);
    for (double v : controls[Agent::kOne][k]) row.push_back(v);
    for (double v : controls[Agent::kTwo][k]) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

VerifyReport verify_solution(const Scenario& sc, const StateSequence& xs, const JointControls& us,
                             const VerifySettings& vs) {
  VerifyReport rep;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double r =
        (xs[k + 1] - sc.model->step(xs[k], us[Agent::kOne][k], us[Agent::kTwo][k], static_cast<int>(k)))
            .cwiseAbs()
            .maxCoeff();
    if (!(r <= rep.max_residual)) {
      rep.max_residual = r;
      rep.worst_residual_timestep = static_cast<int>(k + 1);
    }
  }
  if (!(rep.max_residual <= vs.residual_tol)) return rep;

  const GameDefinition g = sc.game();
  const AffineStrategy fb = local_strategy(g, xs, us, sc.solver.nu_margin);
  VerifyOptions opt;
  opt.radius = vs.radius;
  opt.samples_per_timestep = vs.samples;
  opt.leader_samples_per_timestep = vs.leader_samples;
  opt.num_timesteps = vs.timesteps;
  opt.seed = vs.seed;
  rep.equilibrium = verify_stackelberg(g, xs, us, &fb, opt);
  rep.passed = rep.equilibrium.passed(vs.improvement_tol);
  return rep;
}

VerifyReport verify_trace(const Scenario& sc, const Table& trace, const VerifySettings& vs) {
  if (trace.kind != "solve") throw ConfigError("run.trace", "expected a solve trace, got kind=" + trace.kind);
  const Table expect = solve_trace(sc, {}, {});
  std::vector<int> cols;
  for (const auto& c : expect.columns) {
    const int i = trace.column(c);
    if (i < 0) throw ConfigError("run.trace", "missing column " + c);
    cols.push_back(i);
  }
  if (static_cast<int>(trace.rows.size()) != sc.horizon)
    throw ConfigError("run.trace", "expected " + std::to_string(sc.horizon) + " rows");
  const int n = sc.model->state_dim(), m1 = sc.model->control_dim(Agent::kOne),
            m2 = sc.model->control_dim(Agent::kTwo);
  StateSequence xs;
  JointControls us;
  for (const auto& row : trace.rows) {
    Vector x(n), u1(m1), u2(m2);
    for (int i = 0; i < n; ++i) x(i) = row[cols[2 + i]];
    for (int i = 0; i < m1; ++i) u1(i) = row[cols[2 + n + i]];
    for (int i = 0; i < m2; ++i) u2(i) = row[cols[2 + n + m1 + i]];
    xs.push_back(x);
    us[Agent::kOne].push_back(u1);
    us[Agent::kTwo].push_back(u2);
  }
  return verify_solution(sc, xs, us, vs);
}

void print_verify(std::ostream& out, const VerifyReport& r, const VerifySettings& vs) {
  const bool dyn_ok = r.max_residual <= vs.residual_tol;
  out << (dyn_ok ? "PASS" : "FAIL") << " dynamics: max residual " << r.max_residual;
  if (!dyn_ok) out << " at t=" << r.worst_residual_timestep;
  out << " (tol " << vs.residual_tol << ")\n";
  if (!dyn_ok) {
    out << "SKIP equilibrium: trajectory is not dynamically consistent\n";
    return;
  }
  const auto& e = r.equilibrium;
  out << (e.min_follower_change >= -vs.improvement_tol ? "PASS" : "FAIL") << " follower deviations: min change "
      << e.min_follower_change << " at t=" << e.worst_follower_timestep << " over " << e.follower_samples
      << " samples\n";
  if (e.leader_samples > 0)
    out << (e.min_leader_change >= -vs.improvement_tol ? "PASS" : "FAIL") << " leader deviations: min change "
        << e.min_leader_change << " at t=" << e.worst_leader_timestep << " over " << e.leader_samples << " samples\n";
  if (e.skipped_samples > 0) out << "note: " << e.skipped_samples << " samples left a cost domain and were skipped\n";
  out << (r.passed ? "PASS" : "FAIL") << " overall\n";
}

int run(const Json& resolved, std::ostream& log) {
  const RunSettings s = settings_from(resolved.at("run"));
  Json scenario_tree = resolved;
  scenario_tree.erase("run");
  const Scenario sc = build_resolved(scenario_tree);
  const fs::path out = output_dir(resolved.at("run"), sc.name, s);
  write_json(out / "config.resolved", resolved);

  if (s.mode == "solve") return run_solve(sc, s, out, log);
  if (s.mode == "filter") return run_filter_mode(sc, s, out, log);
  if (s.mode == "montecarlo-solve") return run_montecarlo_solve(sc, s, out, log);
  if (s.mode == "montecarlo-filter") return run_montecarlo_filter(sc, s, out, log);
  return run_verify(sc, s, out, log);
}

}  // namespace stackelberg::experiment
