#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "stackelberg/game.hpp"
#include "stackelberg/silqgames.hpp"

namespace stackelberg {

struct FilterConfig {
  int num_particles = 50;
  int horizon = 75;  // T_s, steps of each measurement game
  double p_trans = 0.02;
  Matrix process_noise;      // W, n x n PSD
  Matrix measurement_noise;  // Sigma, n x n PD
  double prior_leader_one = 0.5;
  double resample_fraction = 0.5;  // resample when ESS < fraction * N
  /// State entries compared by the likelihood; empty compares the full state.
  std::vector<int> compare_indices;
  SolverConfig solver;
  int workers = 1;

  void validate(int state_dim) const;
};

struct Particle {
  Vector state;
  Vector previous;
  Agent leader = Agent::kOne;
  /// Hypothesis held when `previous` was current; the measurement game is
  /// played with this leader.
  Agent previous_leader = Agent::kOne;
  double weight = 0.0;
};

using ParticleSet = std::vector<Particle>;

/// Observed state and both agents' controls at one timestep.
struct Measurement {
  Vector y;
  std::array<Vector, 2> controls;
};

struct MeasurementTrajectory {
  StateSequence states;  // T_s solved states starting at the particle's previous state
  Vector expected;       // states[1]
  bool converged = false;
  bool domain_failure = false;
};

/// Game template for measurement solves: the model and costs, with horizon
/// and leader supplied per call.
struct MeasurementModel {
  std::shared_ptr<const DynamicsModel> model;
  std::array<StageCostPtr, 2> costs;
};

/// Counter-based seed for one particle at one timestep, so draws do not
/// depend on evaluation order or worker count.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t particle, std::uint64_t timestep);

/// Samples N(0, cov) for a PSD covariance. Holds the factor so repeated
/// draws do not refactor.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix& cov);
  Vector operator()(std::mt19937_64& rng) const;

 private:
  Matrix L_;
};

/// Markov leader flip with probability p_trans, then x_t = f(x_{t-1}, w) + N(0, W).
void propagate(ParticleSet& particles, const std::array<Vector, 2>& controls, const DynamicsModel& model,
               const GaussianSampler& process_noise, double p_trans, std::uint64_t seed, int t);

/// Each agent's last observed control repeated T_s times; zeros without history.
JointControls get_nominal_trajectory(int horizon, const std::array<Vector, 2>* last_controls, int m1, int m2);

/// Solves the T_s-step game from the particle's previous state with its
/// previous leader and returns the state one step ahead.
MeasurementTrajectory expected_measurement(const Particle& particle, const MeasurementModel& mm,
                                           const JointControls& nominal, const FilterConfig& cfg);

struct UpdateReport {
  bool uniform_fallback = false;
};

/// w_k <- w_k N(y; expected_k, Sigma) over the compared entries, normalized.
/// Computed in log space relative to the best particle; each relative
/// likelihood is floored at 1e-300.
UpdateReport measurement_update(ParticleSet& particles, const std::vector<Vector>& expected, const Vector& y,
                                const Matrix& sigma, const std::vector<int>& compare_indices);

double effective_sample_size(const ParticleSet& particles);

/// Systematic resampling with offset u in [0, 1); weights become uniform.
void resample(ParticleSet& particles, double u);
void resample(ParticleSet& particles, std::mt19937_64& rng);

/// (b(H = 1), b(H = 2)); b2 is computed as 1 - b1.
std::array<double, 2> leadership_belief(const ParticleSet& particles);

struct FilterStep {
  int t = 0;
  std::array<double, 2> belief{};
  double ess = 0.0;
  bool resampled = false;
  bool uniform_fallback = false;
  int nonconverged_solves = 0;
  int domain_failures = 0;
  Vector mean_state;
  Vector state_variance;
  double seconds = 0.0;
};

struct FilterResult {
  std::vector<FilterStep> steps;
};

struct FilterHooks {
  /// Called after each completed step with the particle set and the
  /// measurement trajectories used in that step (empty at t = 0).
  std::function<void(const FilterStep&, const ParticleSet&, const std::vector<MeasurementTrajectory>&)> on_step;
};

/// Runs the filter over measurements[0..T-1]; measurements[t].controls are
/// the controls applied at t. Deterministic in (inputs, seed) for any
/// worker count.
FilterResult run_filter(const MeasurementModel& mm, const std::vector<Measurement>& measurements,
                        const FilterConfig& cfg, std::uint64_t seed, const FilterHooks& hooks = {});

/// Runs body(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& body);

}  // namespace stackelberg
