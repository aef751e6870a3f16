#include "stackelberg/silqgames.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace stackelberg {

void SolverConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("solver.tau must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("solver.max_iterations must be >= 1");
  if (!(alpha_min > 0.0) || !(alpha_min <= alpha_initial) || !(alpha_initial <= 1.0))
    throw std::invalid_argument("solver: require 0 < alpha_min <= alpha_initial <= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("solver.beta must be in (0, 1)");
  if (!(nu_margin > 0.0)) throw std::invalid_argument("solver.nu_margin must be > 0");
  if (max_backoffs < 0) throw std::invalid_argument("solver.max_backoffs must be >= 0");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max_iterations";
    case SolveStatus::kDomainViolation: return "domain_violation";
    case SolveStatus::kLQFailure: return "lq_failure";
  }
  return "unknown";
}

std::vector<double> SolveResult::metric_history() const {
  std::vector<double> out;
  out.reserve(history.size());
  for (const auto& h : history) out.push_back(h.metric);
  return out;
}

double convergence_metric(const StateSequence& x_new, const StateSequence& x_old) {
  if (x_new.size() != x_old.size()) throw std::invalid_argument("convergence_metric: length mismatch");
  double m = 0.0;
  for (std::size_t t = 0; t < x_new.size(); ++t) {
    if (x_new[t].size() != x_old[t].size()) throw std::invalid_argument("convergence_metric: state size mismatch");
    if (x_new[t].size() > 0) m = std::max(m, (x_new[t] - x_old[t]).cwiseAbs().maxCoeff());
  }
  return m;
}

double step_size_schedule(int k, const SolverConfig& cfg) {
  if (k < 1) throw std::invalid_argument("step_size_schedule: k must be >= 1");
  double a = cfg.alpha_initial;
  for (int i = 1; i < k && a > cfg.alpha_min; ++i) a = std::max(cfg.alpha_min, cfg.beta * a);
  return a;
}

namespace {

struct Iterate {
  StateSequence states;
  JointControls controls;
  std::array<double, 2> objectives{};
};

std::array<double, 2> objectives(const GameDefinition& game, const StateSequence& xs, const JointControls& us) {
  return {sum_objective(game.cost(Agent::kOne), xs, us), sum_objective(game.cost(Agent::kTwo), xs, us)};
}

LQGame convex_expansion(const GameDefinition& game, const Iterate& it, double margin, int& shifted) {
  LQGame lq = lq_game_about(game, it.states, it.controls);
  shifted = 0;
  for (auto& stage : lq.stages) {
    bool any = false;
    for (auto& c : stage.costs) {
      if (meets_lq_precondition(c)) continue;
      c = convexify(std::move(c), auto_nu(c, margin));
      any = true;
    }
    shifted += any;
  }
  return lq;
}

Iterate forward_pass(const GameDefinition& game, const Iterate& prev, const AffineStrategy& s, double alpha) {
  const int T = static_cast<int>(prev.states.size());
  Iterate next;
  next.states.reserve(T);
  next.states.push_back(prev.states[0]);
  for (int i = 0; i < 2; ++i) next.controls.seq[i].reserve(T);
  for (int t = 0; t < T; ++t) {
    const Vector dx = next.states[t] - prev.states[t];
    for (int i = 0; i < 2; ++i)
      next.controls.seq[i].push_back(prev.controls.seq[i][t] - s.P[i][t] * dx - alpha * s.p[i][t]);
    if (t + 1 < T)
      next.states.push_back(game.model->step(next.states[t], next.controls.seq[0][t], next.controls.seq[1][t], t));
  }
  next.objectives = objectives(game, next.states, next.controls);
  return next;
}

SolveResult finish(SolveResult r, Iterate it, SolveStatus status, std::string message) {
  r.status = status;
  r.converged = status == SolveStatus::kConverged;
  r.message = std::move(message);
  r.states = std::move(it.states);
  r.controls = std::move(it.controls);
  r.objectives = it.objectives;
  return r;
}

}  // namespace

SolveResult solve(const GameDefinition& game, const Vector& x1, const JointControls& nominal,
                  const SolverConfig& cfg) {
  game.validate();
  cfg.validate();
  if (static_cast<int>(nominal.horizon()) != game.horizon || nominal[Agent::kTwo].size() != nominal.horizon())
    throw std::invalid_argument("solve: nominal controls must have length equal to the horizon");

  SolveResult result;
  Iterate cur;
  cur.controls = nominal;
  cur.states = rollout(*game.model, x1, nominal);
  try {
    cur.objectives = objectives(game, cur.states, cur.controls);
  } catch (const CostDomainError& e) {
    return finish(std::move(result), std::move(cur), SolveStatus::kDomainViolation,
                  std::string("nominal trajectory leaves the cost domain: ") + e.what());
  }

  double alpha = cfg.alpha_initial;
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.k = k;
    result.iterations = k;

    try {
      result.last_strategy = solve_lq_stackelberg(convex_expansion(game, cur, cfg.nu_margin, rec.convexified_stages));
    } catch (const LQSolverError& e) {
      return finish(std::move(result), std::move(cur), SolveStatus::kLQFailure, e.what());
    } catch (const CostDomainError& e) {
      return finish(std::move(result), std::move(cur), SolveStatus::kDomainViolation, e.what());
    }

    Iterate next;
    double a = alpha;
    for (;;) {
      try {
        next = forward_pass(game, cur, result.last_strategy, a);
        break;
      } catch (const CostDomainError& e) {
        if (rec.backoffs == cfg.max_backoffs)
          return finish(std::move(result), std::move(cur), SolveStatus::kDomainViolation,
                        "step backoff exhausted at iteration " + std::to_string(k) + ": " + e.what());
        ++rec.backoffs;
        a *= 0.5;
      }
    }

    rec.alpha = a;
    rec.metric = convergence_metric(next.states, cur.states);
    rec.objectives = next.objectives;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);

    if (rec.metric <= cfg.tau) return finish(std::move(result), std::move(cur), SolveStatus::kConverged, "");
    cur = std::move(next);
    alpha = std::max(cfg.alpha_min, cfg.beta * alpha);
  }
  return finish(std::move(result), std::move(cur), SolveStatus::kMaxIterations,
                "no convergence after " + std::to_string(cfg.max_iterations) + " iterations");
}

AffineStrategy local_strategy(const GameDefinition& game, const StateSequence& states, const JointControls& controls,
                              double nu_margin) {
  int shifted = 0;
  return solve_lq_stackelberg(convex_expansion(game, Iterate{states, controls, {}}, nu_margin, shifted));
}

}  // namespace stackelberg
