#pragma once

#include <string>
#include <vector>

#include "stackelberg/game.hpp"
#include "stackelberg/lq_stackelberg.hpp"

namespace stackelberg {

struct SolverConfig {
  double tau = 1.2e-3;      // convergence threshold on the l-inf trajectory change
  int max_iterations = 3500;
  double alpha_initial = 1.0;
  double alpha_min = 1e-2;
  double beta = 0.98;       // step-size decay factor
  double nu_margin = 1e-3;  // eigenvalue floor used when an expansion needs convexifying
  int max_backoffs = 20;    // step halvings allowed when an update leaves a cost's domain

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class SolveStatus { kConverged, kMaxIterations, kDomainViolation, kLQFailure };
std::string to_string(SolveStatus s);

struct IterationRecord {
  int k = 0;
  double metric = 0.0;
  double alpha = 0.0;  // step actually taken, after any backoff
  std::array<double, 2> objectives{};
  double seconds = 0.0;
  int backoffs = 0;
  int convexified_stages = 0;
};

struct SolveResult {
  bool converged = false;
  SolveStatus status = SolveStatus::kMaxIterations;
  std::string message;
  int iterations = 0;
  StateSequence states;
  JointControls controls;
  std::array<double, 2> objectives{};
  std::vector<IterationRecord> history;
  /// Strategy of the last LQ solve, expanded about the returned iterate when
  /// converged. Usable as feedback for verify_stackelberg.
  AffineStrategy last_strategy;

  std::vector<double> metric_history() const;
};

/// Iterative LQ Stackelberg solver. Each iteration expands the game about
/// the current iterate, shifts any expansion that is not convex enough,
/// solves the LQ game and takes the step u <- u - P dx - alpha p in a
/// forward pass. Stops when the l-inf change of the state trajectory falls
/// to tau and returns the iterate before that change.
SolveResult solve(const GameDefinition& game, const Vector& x1, const JointControls& nominal,
                  const SolverConfig& cfg);

/// LQ strategy of the game expanded (and convexified where needed) about a
/// trajectory.
AffineStrategy local_strategy(const GameDefinition& game, const StateSequence& states, const JointControls& controls,
                              double nu_margin);

/// Max-abs entry of x_new - x_old across all timesteps.
double convergence_metric(const StateSequence& x_new, const StateSequence& x_old);

/// alpha_1 = cfg.alpha_initial, alpha_{k+1} = max(alpha_min, beta alpha_k).
double step_size_schedule(int k, const SolverConfig& cfg);

}  // namespace stackelberg
