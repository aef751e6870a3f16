#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stackelberg/experiment.hpp"

using namespace stackelberg;
using namespace stackelberg::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Table contents without wall-clock columns.
std::vector<std::vector<double>> untimed(const Table& t) {
  const int skip = t.column("seconds");
  std::vector<std::vector<double>> out;
  for (auto row : t.rows) {
    if (skip >= 0) row.erase(row.begin() + skip);
    out.push_back(row);
  }
  return out;
}

Json small_filter_run(const std::string& mode, const fs::path& out, int workers = 1) {
  return resolve_config(Json{{"scenario", {{"name", "lq_shepherd_sheep"}, {"horizon", 30}}},
                             {"filter", {{"num_particles", 8}, {"horizon", 5}}}},
                        {"run.duration_limit=0.3", "run.reps=2"},
                        Json{{"run", {{"mode", mode}, {"out", out.string()}, {"seed", 11}, {"workers", workers}}}});
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  const auto dir = scratch("csv");
  Table t{"solve", {"t", "a", "b"}, {{0.0, 0.1, -1e-300}, {1.0, 1.0 / 3.0, 12345678.9}, {2.0, 1.7e308, -0.0}}};
  write_table((dir / "t.csv").string(), t);
  const Table back = read_table((dir / "t.csv").string());
  EXPECT_EQ(back.kind, "solve");
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("b"), 2);
  EXPECT_EQ(back.column("nope"), -1);
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Csv, RejectsUnknownVersionAndMalformedRows) {
  const auto dir = scratch("csv_bad");
  std::ofstream(dir / "v9.csv") << "#slf-trace v9 kind=solve\nt,a\n0,1\n";
  EXPECT_THROW(read_table((dir / "v9.csv").string()), ConfigError);
  std::ofstream(dir / "short.csv") << "#slf-trace v1 kind=solve\nt,a\n0\n";
  EXPECT_THROW(read_table((dir / "short.csv").string()), ConfigError);
  std::ofstream(dir / "text.csv") << "#slf-trace v1 kind=solve\nt,a\n0,x\n";
  EXPECT_THROW(read_table((dir / "text.csv").string()), ConfigError);
  EXPECT_THROW(read_table((dir / "missing.csv").string()), ConfigError);
}

TEST(Summary, AggregatesAndRecomputeCheck) {
  RepSummary a, b;
  a.rep = 0, a.converged = true, a.iterations = 10, a.metric_history = {3.0, 1.0};
  b.rep = 1, b.converged = false, b.iterations = 20, b.metric_history = {5.0, 2.0, 1.0};
  const auto agg = aggregate({a, b});
  EXPECT_DOUBLE_EQ(agg.mean_iterations, 15.0);
  EXPECT_DOUBLE_EQ(agg.std_iterations, 5.0);
  EXPECT_DOUBLE_EQ(agg.convergence_rate, 0.5);
  ASSERT_EQ(agg.metric_bands[1].size(), 3u);
  EXPECT_DOUBLE_EQ(agg.metric_bands[1][0], 4.0);
  EXPECT_DOUBLE_EQ(agg.metric_bands[1][2], 1.0);
  EXPECT_DOUBLE_EQ(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 10.0), 1.4);

  const auto dir = scratch("summary");
  Json j = summary_json("lq_shepherd_sheep", "montecarlo-solve", {a, b});
  std::ofstream(dir / "good.json") << j.dump();
  EXPECT_EQ(load_summary((dir / "good.json").string()).size(), 2u);
  j["aggregate"]["mean_iterations"] = 16.0;
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_THROW(load_summary((dir / "bad.json").string()), ConfigError);
}

TEST(Summary, TimingReport) {
  RepSummary one;
  one.iteration_seconds = {2.0};
  auto r = timing_report({{one}});
  EXPECT_EQ(r.iteration.samples, 1);
  EXPECT_EQ(r.iteration.std, 0.0);
  RepSummary two;
  two.iteration_seconds = {1.0, 3.0};
  r = timing_report({{two}});
  EXPECT_DOUBLE_EQ(r.iteration.mean, 2.0);
  EXPECT_DOUBLE_EQ(r.iteration.std, 1.0);
  std::ostringstream out;
  print_timing(out, r);
  EXPECT_NE(out.str().find("2"), std::string::npos);
}

TEST(Config, LayeringOrder) {
  const Json file{{"scenario", {{"name", "lq_shepherd_sheep"}, {"horizon", 50}}}, {"run", {{"seed", 3}}}};
  const auto r = resolve_config(file, {"scenario.horizon=60", "run.seed=4"}, Json{{"run", {{"seed", 5}}}});
  EXPECT_EQ(r["scenario"]["horizon"].get<int>(), 60);
  EXPECT_EQ(r["run"]["seed"].get<int>(), 5);
  EXPECT_EQ(r["scenario"]["dt"].get<double>(), 0.02);
  EXPECT_EQ(r["run"]["mode"].get<std::string>(), "solve");
  const auto named = resolve_config(Json(), {"scenario.name=passing"}, Json::object());
  EXPECT_EQ(named["scenario"]["horizon"].get<int>(), 151);
}

TEST(Config, ErrorsCarryKeyPaths) {
  auto path_of = [](auto&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(path_of([] { resolve_config(Json::object(), {}, Json::object()); }), "scenario.name");
  EXPECT_EQ(path_of([] { resolve_config(Json::object(), {"scenario.name=lq_shepherd_sheep", "solver.bogus=1"}, {}); }),
            "solver.bogus");
  EXPECT_EQ(path_of([] {
              resolve_config(Json::object(), {"scenario.name=lq_shepherd_sheep", "scenario.horizon=\"long\""}, {});
            }),
            "scenario.horizon");
  const auto dir = scratch("bad_mode");
  const auto bad = resolve_config(Json::object(), {"scenario.name=lq_shepherd_sheep", "run.mode=dance"},
                                  Json{{"run", {{"out", dir.string()}}}});
  std::ostringstream log;
  EXPECT_EQ(path_of([&] { run(bad, log); }), "run.mode");
}

TEST(Runner, LQSolveWritesArtifacts) {
  const auto dir = scratch("lq_solve");
  const auto cfg = resolve_config(Json{{"scenario", {{"name", "lq_shepherd_sheep"}}}}, {},
                                  Json{{"run", {{"out", dir.string()}}}});
  std::ostringstream log;
  ASSERT_EQ(run(cfg, log), 0) << log.str();
  const Table it = read_table((dir / "iterations.csv").string());
  EXPECT_GE(it.rows.size(), 1u);
  EXPECT_LE(it.rows.size(), 3u);
  const Table trace = read_table((dir / "trace.csv").string());
  EXPECT_EQ(trace.rows.size(), 501u);
  EXPECT_EQ(load_summary((dir / "summary.json").string()).front().converged, true);
  EXPECT_TRUE(fs::exists(dir / "config.resolved"));
}

TEST(Runner, NonConvergedSolveExitsTwo) {
  const auto dir = scratch("nonconv");
  const auto cfg = resolve_config(Json::object(),
                                  {"scenario.name=nonlq_shepherd_sheep", "scenario.horizon=50", "solver.max_iterations=1"},
                                  Json{{"run", {{"out", dir.string()}}}});
  std::ostringstream log;
  EXPECT_EQ(run(cfg, log), 2);
  auto allowed = cfg;
  allowed["run"]["allow_nonconverged"] = true;
  EXPECT_EQ(run(allowed, log), 0);
}

TEST(Runner, FilterRunIsReproducible) {
  const auto a = scratch("filter_a"), b = scratch("filter_b");
  std::ostringstream log;
  ASSERT_EQ(run(small_filter_run("filter", a), log), 0) << log.str();
  ASSERT_EQ(run(small_filter_run("filter", b), log), 0);
  const Table ta = read_table((a / "trace.csv").string()), tb = read_table((b / "trace.csv").string());
  EXPECT_EQ(ta.kind, "filter");
  EXPECT_EQ(ta.rows.size(), 16u);  // duration_limit 0.3 s at dt 0.02
  EXPECT_EQ(untimed(ta), untimed(tb));
  const int b1 = ta.column("b1"), b2 = ta.column("b2");
  ASSERT_GE(b1, 0);
  for (const auto& row : ta.rows) EXPECT_EQ(row[b1] + row[b2], 1.0);

  // Re-running the written resolved config reproduces the run.
  const auto c = scratch("filter_c");
  Json again = load_json_file((a / "config.resolved").string());
  again["run"]["out"] = c.string();
  ASSERT_EQ(run(again, log), 0);
  EXPECT_EQ(untimed(read_table((c / "trace.csv").string())), untimed(ta));
}

TEST(Runner, MonteCarloIsIndependentOfWorkerCount) {
  std::ostringstream log;
  const auto s1 = scratch("mc_solve_1"), s2 = scratch("mc_solve_2");
  auto solve_cfg = [](const fs::path& out, int workers) {
    return resolve_config(Json::object(), {"scenario.name=nonlq_shepherd_sheep", "scenario.horizon=40", "run.reps=3"},
                          Json{{"run", {{"mode", "montecarlo-solve"}, {"out", out.string()}, {"workers", workers}}}});
  };
  ASSERT_EQ(run(solve_cfg(s1, 1), log), 0) << log.str();
  ASSERT_EQ(run(solve_cfg(s2, 2), log), 0);
  EXPECT_EQ(untimed(read_table((s1 / "runs.csv").string())), untimed(read_table((s2 / "runs.csv").string())));
  EXPECT_EQ(untimed(read_table((s1 / "iterations.csv").string())),
            untimed(read_table((s2 / "iterations.csv").string())));

  const auto f1 = scratch("mc_filter_1"), f2 = scratch("mc_filter_2");
  ASSERT_EQ(run(small_filter_run("montecarlo-filter", f1, 1), log), 0);
  ASSERT_EQ(run(small_filter_run("montecarlo-filter", f2, 2), log), 0);
  const Table b = read_table((f1 / "beliefs.csv").string());
  EXPECT_EQ(b.rows.size(), 32u);
  EXPECT_EQ(untimed(b), untimed(read_table((f2 / "beliefs.csv").string())));
}

TEST(Verify, FlagsCorruptedCellAndPassesCleanTrace) {
  const auto dir = scratch("verify");
  std::ostringstream log;
  const auto cfg = resolve_config(Json::object(), {"scenario.name=nonlq_shepherd_sheep", "scenario.horizon=60"},
                                  Json{{"run", {{"out", dir.string()}}}});
  ASSERT_EQ(run(cfg, log), 0) << log.str();
  const Scenario sc = build_resolved([&] {
    Json t = cfg;
    t.erase("run");
    return t;
  }());
  Table trace = read_table((dir / "trace.csv").string());
  VerifySettings vs;
  const auto ok = verify_trace(sc, trace, vs);
  EXPECT_LE(ok.max_residual, 1e-8);
  EXPECT_TRUE(ok.passed);

  trace.rows[5][trace.column("x1_px")] += 0.5;
  const auto bad = verify_trace(sc, trace, vs);
  EXPECT_FALSE(bad.passed);
  EXPECT_EQ(bad.worst_residual_timestep, 5);

  Table shuffled = read_table((dir / "trace.csv").string());
  shuffled.columns.pop_back();
  for (auto& row : shuffled.rows) row.pop_back();
  EXPECT_THROW(verify_trace(sc, shuffled, vs), ConfigError);
}

TEST(Verify, NonEquilibriumTraceReportsImprovement) {
  // A converged solution with the follower's controls pushed off their
  // optimum, re-simulated so the trace stays dynamically consistent.
  const auto sc = build("nonlq_shepherd_sheep", Json{{"scenario", {{"horizon", 60}}}});
  const auto gt = generate_ground_truth(sc, 0);
  ASSERT_TRUE(gt.converged);
  JointControls u = gt.controls;
  for (auto& ut : u[other(sc.leader)]) ut.array() += 0.5;
  const auto xs = rollout(*sc.model, gt.states[0], u);
  VerifySettings vs;
  const auto rep = verify_solution(sc, xs, u, vs);
  EXPECT_LE(rep.max_residual, 1e-8);
  EXPECT_LT(rep.equilibrium.min_follower_change, -vs.improvement_tol);
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(verify_solution(sc, gt.states, gt.controls, vs).passed);
}

TEST(Verify, CliModeExitCodes) {
  const auto dir = scratch("verify_mode");
  std::ostringstream log;
  const auto solve_cfg = resolve_config(Json::object(), {"scenario.name=lq_shepherd_sheep", "scenario.horizon=80"},
                                        Json{{"run", {{"out", dir.string()}}}});
  ASSERT_EQ(run(solve_cfg, log), 0);
  auto vcfg = solve_cfg;
  vcfg["run"]["mode"] = "verify";
  vcfg["run"]["trace"] = (dir / "trace.csv").string();
  vcfg["run"]["out"] = (dir / "v").string();
  EXPECT_EQ(run(vcfg, log), 0) << log.str();
  EXPECT_TRUE(load_json_file((dir / "v" / "verify.json").string())["passed"].get<bool>());

  Table t = read_table((dir / "trace.csv").string());
  t.rows[10][t.column("x2_vy")] += 1.0;
  write_table((dir / "bad.csv").string(), t);
  vcfg["run"]["trace"] = (dir / "bad.csv").string();
  EXPECT_EQ(run(vcfg, log), 3);
}
