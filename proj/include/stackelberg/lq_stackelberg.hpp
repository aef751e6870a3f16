#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stackelberg/costs.hpp"
#include "stackelberg/dynamics.hpp"
#include "stackelberg/game.hpp"

namespace stackelberg {

/// One timestep of an LQ game in deviation coordinates.
struct LQStage {
  LinearizedDynamics dynamics;
  std::array<QuadraticApproximation, 2> costs;  // indexed by agent
};

/// Finite-horizon, two-agent LQ game. The last stage's dynamics are unused.
struct LQGame {
  std::vector<LQStage> stages;
  Agent leader = Agent::kOne;

  int horizon() const { return static_cast<int>(stages.size()); }
};

/// Time-varying affine feedback law u_t^(i) = -P_t^(i) x_t - p_t^(i).
struct AffineStrategy {
  std::array<std::vector<Matrix>, 2> P;
  std::array<std::vector<Vector>, 2> p;
  /// Timesteps where a recursion solve had reciprocal condition < 1e-10.
  std::vector<int> ill_conditioned;

  int horizon() const { return static_cast<int>(P[0].size()); }
  Vector control(Agent a, int t, const Vector& x) const { return -P[index(a)][t] * x - p[index(a)][t]; }
};

/// Raised when a recursion matrix is not positive definite.
class LQSolverError : public std::runtime_error {
 public:
  LQSolverError(int timestep, const std::string& what)
      : std::runtime_error("LQ Stackelberg recursion failed at t=" + std::to_string(timestep) + ": " + what),
        timestep_(timestep) {}
  int timestep() const { return timestep_; }

 private:
  int timestep_;
};

/// Feedback Stackelberg solution by backward recursion. At each stage the
/// follower's reaction to the leader's control is solved in closed form and
/// substituted into the leader's stage-plus-cost-to-go before the leader
/// minimizes. Linear cost terms produce the feedforward p.
AffineStrategy solve_lq_stackelberg(const LQGame& game);

struct Trajectory {
  StateSequence states;
  JointControls controls;
};

/// Closed-loop simulation of a strategy through (possibly nonlinear) dynamics.
Trajectory apply(const AffineStrategy& strategy, const DynamicsModel& model, const Vector& x1);
/// Closed-loop simulation through the game's own linear dynamics.
Trajectory apply(const AffineStrategy& strategy, const LQGame& game, const Vector& x1);

/// Exact LQ game of an LQ problem: expands the costs and dynamics about the
/// origin with zero controls. Only meaningful for linear dynamics and
/// quadratic costs, where the expansion is exact.
LQGame lq_game_at_origin(const GameDefinition& game);

/// Expansion of a game about a trajectory (no convexification).
LQGame lq_game_about(const GameDefinition& game, const StateSequence& states, const JointControls& controls);

// ---------------------------------------------------------------------------
// Equilibrium verification by sampled perturbation.

struct VerifyOptions {
  double radius = 0.1;             // perturbation norm
  int samples_per_timestep = 100;  // follower samples
  int leader_samples_per_timestep = 0;
  int num_timesteps = 10;          // random timesteps drawn when `timesteps` is empty
  std::vector<int> timesteps;
  std::uint64_t seed = 0;
};

struct PerturbationReport {
  /// Smallest follower-objective change over all follower perturbations.
  double min_follower_change = std::numeric_limits<double>::infinity();
  int worst_follower_timestep = -1;
  /// Smallest leader-objective change when the follower re-solves its
  /// response to a perturbed leader control.
  double min_leader_change = std::numeric_limits<double>::infinity();
  int worst_leader_timestep = -1;
  int follower_samples = 0;
  int leader_samples = 0;
  int skipped_samples = 0;  // perturbations leaving the cost domain

  bool passed(double tol) const { return min_follower_change >= -tol && min_leader_change >= -tol; }
};

/// Perturbs single-stage controls of a candidate solution and measures the
/// change in each agent's objective. Later stages respond through `feedback`
/// (u_s = ubar_s - P_s (x_s - xbar_s)) when given, otherwise they are held.
PerturbationReport verify_stackelberg(const GameDefinition& game, const StateSequence& states,
                                      const JointControls& controls, const AffineStrategy* feedback,
                                      const VerifyOptions& options);

}  // namespace stackelberg
