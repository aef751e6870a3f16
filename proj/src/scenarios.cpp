#include "stackelberg/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "stackelberg/driving_costs.hpp"
#include "stackelberg/lq_stackelberg.hpp"

namespace stackelberg {
namespace {

constexpr std::uint64_t kStartStream = 0x5ca7;

Json solver_json(double tau, int max_iterations, double alpha_min) {
  SolverConfig d;
  return Json{{"tau", tau},
              {"max_iterations", max_iterations},
              {"alpha_initial", d.alpha_initial},
              {"alpha_min", alpha_min},
              {"beta", d.beta},
              {"nu_margin", d.nu_margin},
              {"max_backoffs", d.max_backoffs}};
}

SolverConfig solver_from(const Json& j, const std::string& path) {
  SolverConfig c;
  c.tau = get<double>(j, "tau", path);
  c.max_iterations = get<int>(j, "max_iterations", path);
  c.alpha_initial = get<double>(j, "alpha_initial", path);
  c.alpha_min = get<double>(j, "alpha_min", path);
  c.beta = get<double>(j, "beta", path);
  c.nu_margin = get<double>(j, "nu_margin", path);
  c.max_backoffs = get<int>(j, "max_backoffs", path);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

Json filter_json(int particles, int horizon, std::vector<double> process_noise, double sigma, Json solver) {
  return Json{{"num_particles", particles},
              {"horizon", horizon},
              {"p_trans", 0.02},
              {"process_noise", process_noise},
              {"measurement_noise", sigma},
              {"prior_leader_one", 0.5},
              {"resample_fraction", 0.5},
              {"compare", "full"},
              {"solver", std::move(solver)}};
}

// Per-agent process-noise diagonals, repeated for both agents.
std::vector<double> both(std::vector<double> block) {
  std::vector<double> out = block;
  out.insert(out.end(), block.begin(), block.end());
  return out;
}

FilterConfig filter_from(const Json& j, const TwoAgentModel& model) {
  const std::string path = "filter";
  const int n = model.state_dim();
  FilterConfig f;
  f.num_particles = get<int>(j, "num_particles", path);
  f.horizon = get<int>(j, "horizon", path);
  f.p_trans = get<double>(j, "p_trans", path);
  const auto w = get<std::vector<double>>(j, "process_noise", path);
  if (static_cast<int>(w.size()) != n) throw ConfigError("filter.process_noise", "expected " + std::to_string(n) + " entries");
  f.process_noise = Eigen::Map<const Vector>(w.data(), n).asDiagonal();
  f.measurement_noise = get<double>(j, "measurement_noise", path) * Matrix::Identity(n, n);
  f.prior_leader_one = get<double>(j, "prior_leader_one", path);
  f.resample_fraction = get<double>(j, "resample_fraction", path);
  const auto compare = get<std::string>(j, "compare", path);
  if (compare == "positions") {
    for (Agent a : {Agent::kOne, Agent::kTwo})
      for (int i : model.position_indices(a)) f.compare_indices.push_back(i);
  } else if (compare != "full") {
    throw ConfigError("filter.compare", "expected \"full\" or \"positions\"");
  }
  f.solver = solver_from(j.at("solver"), "filter.solver");
  try {
    f.validate(n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("filter", e.what());
  }
  return f;
}

Json shepherd_defaults(bool lq) {
  Json s{{"name", lq ? "lq_shepherd_sheep" : "nonlq_shepherd_sheep"},
         {"dt", 0.02},
         {"horizon", 501},
         {"leader", lq ? 1 : 2},
         {"agent1_position", {2.0, 1.0}}};
  if (lq) {
    s["agent2_position"] = {-1.0, 2.0};
  } else {
    s["barrier_half_width"] = 5.0;
    s["agent2_radius"] = std::sqrt(5.0);
    s["agent2_angle"] = std::atan2(2.0, -1.0);
    s["start_arc"] = 0.4;
    s["vary_start"] = true;
  }
  return s;
}

Json driving_defaults(bool passing) {
  Json s{{"name", passing ? "passing" : "merging"},
         {"dt", 0.05},
         {"horizon", passing ? 151 : 101},
         {"leader", 1},
         {"lane_width", 2.5},
         {"road_length", passing ? 150.0 : 100.0},
         {"center_line_x", 0.0},
         {"speed_limit", 35.0},
         {"max_heading_dev", std::numbers::pi / 3.0},
         {"collision_radius", 0.2},
         {"max_accel", 9.0},
         {"max_yaw_rate", 2.0},
         {"initial_speed", 10.0},
         {"goal_weights", {1.0, 1.0, 1.0, 0.1}},
         {"weights", {1.0, 1.0, 1.0, 0.1, 1.0, 1.0}},
         {"center_sigma_x", 1.25},
         {"center_sigma_y", 1e3},
         {"use_center_line", passing},
         {"position_tolerance", 0.1}};
  if (passing) {
    s["agent1_start_station"] = 8.0;
    s["agent2_start_station"] = 0.0;
    s["follow_time"] = 2.5;
    s["lane_change_duration"] = 1.5;
    s["return_time"] = 5.5;
    s["pass_speed_gain"] = 4.7;
  } else {
    s["lanes_length"] = 30.0;
    s["merge_length"] = 30.0;
    s["agent1_start_station"] = 0.0;
    s["agent2_start_station"] = 10.0;
    s["agent2_merge_time"] = 2.5;
    s["agent1_slow_time"] = 0.5;
    s["agent1_slow_duration"] = 1.5;
    s["agent1_speed_drop"] = 3.0;
    s["agent1_merge_time"] = 3.8;
    s["merge_duration"] = 1.0;
  }
  return s;
}

const std::vector<double> kDoubleIntegratorNoise{1e-3, 1e-4, 1e-3, 1e-4};  // px, vx, py, vy
const std::vector<double> kUnicycleNoise{1e-3, 1e-3, 1e-3, 1e-4};          // px, py, heading, speed

void build_shepherd(Scenario& sc, const Json& s, bool lq) {
  const std::string p = "scenario";
  const double dt = get<double>(s, "dt", p);
  if (!(dt > 0.0)) throw ConfigError("scenario.dt", "must be positive");
  sc.model = lq ? make_double_integrator_game(dt) : make_unicycle_game(dt);
  const auto p1 = sc.model->position_indices(Agent::kOne), p2 = sc.model->position_indices(Agent::kTwo);
  if (lq) {
    sc.costs = {shepherd_cost(p2), sheep_cost(p1, p2)};
    sc.truth = TruthKind::kAnalyticLQ;
  } else {
    const double half = get<double>(s, "barrier_half_width", p);
    if (!(half > 0.0)) throw ConfigError("scenario.barrier_half_width", "must be positive");
    sc.costs = {barrier_shepherd_cost(p2, half), sheep_cost(p1, p2)};
    sc.truth = TruthKind::kSilqGames;
  }
}

void build_driving(Scenario& sc, const Json& s, bool passing) {
  const std::string p = "scenario";
  const double dt = get<double>(s, "dt", p);
  if (!(dt > 0.0)) throw ConfigError("scenario.dt", "must be positive");
  sc.model = make_unicycle_game(dt);
  const double lw = get<double>(s, "lane_width", p);
  const double length = get<double>(s, "road_length", p);
  try {
    sc.road = std::make_shared<RoadGeometry>(
        passing ? RoadGeometry::two_way(lw, length)
                : RoadGeometry::merging(lw, get<double>(s, "lanes_length", p), get<double>(s, "merge_length", p), length));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scenario", e.what());
  }

  const double v0 = get<double>(s, "initial_speed", p);
  DrivingCostParams dp;
  dp.speed_limit = get<double>(s, "speed_limit", p);
  dp.max_heading_dev = get<double>(s, "max_heading_dev", p);
  dp.collision_radius = get<double>(s, "collision_radius", p);
  dp.center_x = get<double>(s, "center_line_x", p);
  dp.center_sigma_x = get<double>(s, "center_sigma_x", p);
  dp.center_sigma_y = get<double>(s, "center_sigma_y", p);
  dp.use_center_line = get<bool>(s, "use_center_line", p);
  const auto gw = get<std::vector<double>>(s, "goal_weights", p);
  dp.goal_weights = Eigen::Vector4d(gw[0], gw[1], gw[2], gw[3]);
  const auto w = get<std::vector<double>>(s, "weights", p);
  for (int i = 0; i < 6; ++i) dp.weights[i] = w[i];
  for (Agent a : {Agent::kOne, Agent::kTwo}) {
    // Goal: end of the road in the lane the agent should finish in, at the
    // starting speed.
    const double goal_x = passing ? sc.road->lane_center(a) : 0.0;
    dp.goal = Eigen::Vector4d(goal_x, length, std::numbers::pi / 2.0, v0);
    try {
      sc.costs[index(a)] = driving_cost(a, dp, sc.road);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("scenario", e.what());
    }
  }

  sc.truth = TruthKind::kScripted;
  sc.limits.max_accel = get<double>(s, "max_accel", p);
  sc.limits.max_yaw_rate = get<double>(s, "max_yaw_rate", p);
  sc.position_tolerance = get<double>(s, "position_tolerance", p);

  ManeuverScript a1, a2;
  a1.v0 = a2.v0 = v0;
  a1.x0 = sc.road->lane_center(Agent::kOne);
  a2.x0 = sc.road->lane_center(Agent::kTwo);
  a1.y0 = get<double>(s, "agent1_start_station", p);
  a2.y0 = get<double>(s, "agent2_start_station", p);
  if (passing) {
    // Agent 2 follows, pulls into the oncoming lane while speeding up,
    // passes, and returns ahead of agent 1. Agent 1 coasts.
    const double follow = get<double>(s, "follow_time", p);
    const double change = get<double>(s, "lane_change_duration", p);
    const double back = get<double>(s, "return_time", p);
    const double gain = get<double>(s, "pass_speed_gain", p);
    a1.coast = true;
    a2.lateral = {{follow, change, -2.0 * a2.x0}, {back, change, 2.0 * a2.x0}};
    a2.speed = {{follow, change, gain}, {back, change, -gain}};
  } else {
    // Agent 2 enters the merge section and delays its merge; agent 1 slows
    // to yield and merges behind it.
    const double dur = get<double>(s, "merge_duration", p);
    a2.lateral = {{get<double>(s, "agent2_merge_time", p), dur, -a2.x0}};
    a1.speed = {{get<double>(s, "agent1_slow_time", p), get<double>(s, "agent1_slow_duration", p),
                 -get<double>(s, "agent1_speed_drop", p)}};
    a1.lateral = {{get<double>(s, "agent1_merge_time", p), dur, -a1.x0}};
  }
  sc.scripts = {a1, a2};
}

}  // namespace

std::vector<std::string> preset_names() { return {"lq_shepherd_sheep", "nonlq_shepherd_sheep", "passing", "merging"}; }

Json preset_config(const std::string& name) {
  if (name == "lq_shepherd_sheep")
    return Json{{"scenario", shepherd_defaults(true)},
                {"solver", solver_json(1.2e-3, 3500, 1e-2)},
                {"filter", filter_json(50, 75, both(kDoubleIntegratorNoise), 5e-3, solver_json(1.5e-2, 50, 1e-2))}};
  if (name == "nonlq_shepherd_sheep")
    return Json{{"scenario", shepherd_defaults(false)},
                {"solver", solver_json(1.2e-3, 3500, 1e-2)},
                {"filter", filter_json(50, 75, both(kUnicycleNoise), 2e-2, solver_json(1e-3, 50, 2e-2))}};
  if (name == "passing" || name == "merging") {
    const bool passing = name == "passing";
    return Json{{"scenario", driving_defaults(passing)},
                {"solver", solver_json(1.5e-2, 50, 1e-2)},
                {"filter", filter_json(100, 20, both(kUnicycleNoise), 5e-3, solver_json(1.5e-2, 50, 1e-2))}};
  }
  throw ConfigError("scenario.name", "unknown scenario '" + name + "'");
}

Scenario build(const std::string& name, const Json& overrides) {
  return build_resolved(merge_checked(preset_config(name), overrides));
}

Scenario build_resolved(const Json& resolved) {
  if (!resolved.contains("scenario")) throw ConfigError("scenario", "missing section");
  const Json& s = resolved.at("scenario");
  Scenario sc;
  sc.name = get<std::string>(s, "name", "scenario");
  // Reject keys the preset does not define.
  merge_checked(preset_config(sc.name), resolved);
  sc.config = resolved;

  if (sc.name == "lq_shepherd_sheep" || sc.name == "nonlq_shepherd_sheep") {
    build_shepherd(sc, s, sc.name == "lq_shepherd_sheep");
  } else {
    build_driving(sc, s, sc.name == "passing");
  }
  try {
    sc.leader = agent_from_label(get<int>(s, "leader", "scenario"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scenario.leader", e.what());
  }
  sc.horizon = get<int>(s, "horizon", "scenario");
  if (sc.horizon < 2) throw ConfigError("scenario.horizon", "must be >= 2");
  sc.solver = solver_from(resolved.at("solver"), "solver");
  sc.filter = filter_from(resolved.at("filter"), *sc.model);
  return sc;
}

Vector Scenario::initial_state(std::uint64_t seed, int rep) const {
  const Json& s = config.at("scenario");
  if (truth == TruthKind::kScripted) {
    Vector x(8);
    x << scripts[0].initial_state(), scripts[1].initial_state();
    return x;
  }
  const auto a1 = get<std::vector<double>>(s, "agent1_position", "scenario");
  Eigen::Vector2d p1(a1[0], a1[1]), p2;
  if (truth == TruthKind::kAnalyticLQ) {
    const auto a2 = get<std::vector<double>>(s, "agent2_position", "scenario");
    p2 = {a2[0], a2[1]};
    Vector x(8);
    x << p1.x(), 0.0, p1.y(), 0.0, p2.x(), 0.0, p2.y(), 0.0;
    return x;
  }
  double angle = get<double>(s, "agent2_angle", "scenario");
  if (get<bool>(s, "vary_start", "scenario")) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(rep), kStartStream));
    angle += get<double>(s, "start_arc", "scenario") * (std::uniform_real_distribution<double>(0.0, 1.0)(rng) - 0.5);
  }
  const double r = get<double>(s, "agent2_radius", "scenario");
  p2 = {r * std::cos(angle), r * std::sin(angle)};
  // Stationary, facing the origin.
  Vector x(8);
  x << p1.x(), p1.y(), std::atan2(-p1.y(), -p1.x()), 0.0, p2.x(), p2.y(), std::atan2(-p2.y(), -p2.x()), 0.0;
  return x;
}

GroundTruth generate_ground_truth(const Scenario& sc, std::uint64_t seed, int rep) {
  GroundTruth gt;
  const Vector x1 = sc.initial_state(seed, rep);
  switch (sc.truth) {
    case TruthKind::kAnalyticLQ: {
      const auto traj = apply(solve_lq_stackelberg(lq_game_at_origin(sc.game())), *sc.model, x1);
      gt.states = traj.states;
      gt.controls = traj.controls;
      break;
    }
    case TruthKind::kSilqGames: {
      const GameDefinition g = sc.game();
      const auto res = solve(g, x1,
                             zero_controls(g.horizon, sc.model->control_dim(Agent::kOne),
                                           sc.model->control_dim(Agent::kTwo)),
                             sc.solver);
      gt.states = res.states;
      gt.controls = res.controls;
      gt.converged = res.converged;
      gt.iterations = res.iterations;
      gt.status = to_string(res.status);
      break;
    }
    case TruthKind::kScripted: {
      const auto st = track_scripts(*sc.model, sc.scripts, sc.horizon, sc.limits, sc.position_tolerance);
      gt.states = st.states;
      gt.controls = st.controls;
      break;
    }
  }
  gt.objectives = {sum_objective(*sc.costs[0], gt.states, gt.controls),
                   sum_objective(*sc.costs[1], gt.states, gt.controls)};
  return gt;
}

std::vector<Vector> simulate_measurements(const StateSequence& states, const Matrix& sigma, std::uint64_t seed) {
  if (min_eigenvalue(0.5 * (sigma + sigma.transpose())) < 1e-12)
    throw std::invalid_argument("simulate_measurements: covariance must be >= 1e-12 I");
  const GaussianSampler noise(sigma);
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(states.size());
  for (const auto& x : states) out.push_back(x + noise(rng));
  return out;
}

std::vector<Measurement> make_measurements(const GroundTruth& truth, const std::vector<Vector>& observed) {
  if (observed.size() != truth.states.size()) throw std::invalid_argument("make_measurements: length mismatch");
  std::vector<Measurement> out;
  out.reserve(observed.size());
  for (std::size_t t = 0; t < observed.size(); ++t)
    out.push_back({observed[t], {truth.controls[Agent::kOne][t], truth.controls[Agent::kTwo][t]}});
  return out;
}

}  // namespace stackelberg
