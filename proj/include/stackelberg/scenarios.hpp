#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stackelberg/config.hpp"
#include "stackelberg/game.hpp"
#include "stackelberg/leadership_filter.hpp"
#include "stackelberg/road.hpp"
#include "stackelberg/scripted_maneuvers.hpp"
#include "stackelberg/silqgames.hpp"

namespace stackelberg {

enum class TruthKind { kAnalyticLQ, kSilqGames, kScripted };

/// A fully bound experiment: game, ground-truth recipe, and solver/filter
/// settings. `config` is the resolved parameter tree it was built from.
struct Scenario {
  std::string name;
  Json config;
  std::shared_ptr<const TwoAgentModel> model;
  std::array<StageCostPtr, 2> costs;
  int horizon = 1;
  Agent leader = Agent::kOne;
  TruthKind truth = TruthKind::kAnalyticLQ;
  SolverConfig solver;
  FilterConfig filter;

  std::shared_ptr<const RoadGeometry> road;
  std::array<ManeuverScript, 2> scripts;
  ControlLimits limits;
  double position_tolerance = 0.1;

  GameDefinition game() const { return {model, costs, horizon, leader}; }
  MeasurementModel measurement_model() const { return {model, costs}; }
  /// Start state of repetition `rep`. Presets with a start arc draw the
  /// position from (seed, rep); all others ignore both.
  Vector initial_state(std::uint64_t seed, int rep) const;
};

std::vector<std::string> preset_names();

/// Default parameter tree {scenario, solver, filter} of a preset. Throws
/// ConfigError for unknown names.
Json preset_config(const std::string& name);

/// build(name, overrides): defaults of the preset with `overrides` (a
/// partial tree of the same shape) applied on top.
Scenario build(const std::string& name, const Json& overrides = Json::object());
/// Builds from a complete tree as produced by preset_config.
Scenario build_resolved(const Json& resolved);

struct GroundTruth {
  StateSequence states;
  JointControls controls;
  bool converged = true;
  int iterations = 0;
  std::string status = "ok";
  std::array<double, 2> objectives{};
};

/// Analytic LQ solve, SILQGames solve or scripted maneuver, per preset.
/// Solver-generated truths that fail to converge are returned flagged.
GroundTruth generate_ground_truth(const Scenario& scenario, std::uint64_t seed, int rep = 0);

/// y_t = x_t + N(0, sigma); sigma must have minimum eigenvalue >= 1e-12.
std::vector<Vector> simulate_measurements(const StateSequence& states, const Matrix& sigma, std::uint64_t seed);

/// Pairs noisy states with the (exactly observed) truth controls.
std::vector<Measurement> make_measurements(const GroundTruth& truth, const std::vector<Vector>& observed);

}  // namespace stackelberg
