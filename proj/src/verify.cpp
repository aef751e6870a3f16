#include <algorithm>
#include <cmath>
#include <random>

#include "stackelberg/lq_stackelberg.hpp"

namespace stackelberg {
namespace {

// Re-simulates stages t..T-1 after replacing both stage-t controls. Later
// stages react to the deviation through the feedback gains when available.
class TailEvaluator {
 public:
  TailEvaluator(const GameDefinition& game, const StateSequence& xs, const JointControls& us,
                const AffineStrategy* feedback)
      : game_(game), xs_(xs), us_(us), fb_(feedback) {}

  // Returns both agents' cost-to-go from stage t.
  std::array<double, 2> cost_to_go(int t, const Vector& u1, const Vector& u2) const {
    const int T = static_cast<int>(xs_.size());
    std::array<double, 2> J{0.0, 0.0};
    Vector x = xs_[t];
    Vector v1 = u1, v2 = u2;
    for (int s = t; s < T; ++s) {
      if (s > t) {
        v1 = us_[Agent::kOne][s];
        v2 = us_[Agent::kTwo][s];
        if (fb_) {
          const Vector dx = x - xs_[s];
          v1 -= fb_->P[0][s] * dx;
          v2 -= fb_->P[1][s] * dx;
        }
      }
      J[0] += game_.cost(Agent::kOne).evaluate(x, v1, v2);
      J[1] += game_.cost(Agent::kTwo).evaluate(x, v1, v2);
      if (s + 1 < T) x = game_.model->step(x, v1, v2, s);
    }
    return J;
  }

 private:
  const GameDefinition& game_;
  const StateSequence& xs_;
  const JointControls& us_;
  const AffineStrategy* fb_;
};

Vector sphere_sample(int dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  } while (v.norm() == 0.0);
  return radius * v / v.norm();
}

// Follower best response at stage t to a fixed leader control, by Newton's
// method on central-difference derivatives of its cost-to-go.
Vector follower_response(const TailEvaluator& tail, int t, Agent follower, const Vector& uL, Vector uF) {
  const int f = index(follower);
  auto J = [&](const Vector& v) {
    return f == 0 ? tail.cost_to_go(t, v, uL)[0] : tail.cost_to_go(t, uL, v)[1];
  };
  const int m = static_cast<int>(uF.size());
  const double h = 1e-4;
  for (int it = 0; it < 20; ++it) {
    const double J0 = J(uF);
    Vector g(m);
    Matrix H(m, m);
    for (int i = 0; i < m; ++i) {
      Vector e = Vector::Zero(m);
      e(i) = h;
      const double jp = J(uF + e), jm = J(uF - e);
      g(i) = (jp - jm) / (2 * h);
      H(i, i) = (jp - 2 * J0 + jm) / (h * h);
      for (int k = 0; k < i; ++k) {
        Vector d = Vector::Zero(m);
        d(k) = h;
        H(i, k) = H(k, i) = (J(uF + e + d) - J(uF + e - d) - J(uF - e + d) + J(uF - e - d)) / (4 * h * h);
      }
    }
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Vector step = ldlt.solve(g);
    uF -= step;
    if (step.norm() < 1e-10) break;
  }
  return uF;
}

}  // namespace

PerturbationReport verify_stackelberg(const GameDefinition& game, const StateSequence& states,
                                      const JointControls& controls, const AffineStrategy* feedback,
                                      const VerifyOptions& options) {
  game.validate();
  const int T = static_cast<int>(states.size());
  if (controls.horizon() != states.size()) throw std::invalid_argument("verify_stackelberg: length mismatch");
  if (feedback && feedback->horizon() != T) throw std::invalid_argument("verify_stackelberg: feedback horizon mismatch");

  std::mt19937_64 rng(options.seed);
  std::vector<int> timesteps = options.timesteps;
  if (timesteps.empty()) {
    std::uniform_int_distribution<int> pick(0, T - 1);
    for (int i = 0; i < options.num_timesteps; ++i) timesteps.push_back(pick(rng));
  }

  const Agent L = game.leader, F = other(game.leader);
  const TailEvaluator tail(game, states, controls, feedback);
  PerturbationReport report;

  for (int t : timesteps) {
    if (t < 0 || t >= T) throw std::invalid_argument("verify_stackelberg: timestep out of range");
    const Vector& u1 = controls[Agent::kOne][t];
    const Vector& u2 = controls[Agent::kTwo][t];
    const std::array<double, 2> base = tail.cost_to_go(t, u1, u2);
    const Vector& uF = controls[F][t];
    const Vector& uL = controls[L][t];

    for (int k = 0; k < options.samples_per_timestep && uF.size() > 0; ++k) {
      const Vector v = uF + sphere_sample(static_cast<int>(uF.size()), options.radius, rng);
      try {
        const auto J = F == Agent::kOne ? tail.cost_to_go(t, v, u2) : tail.cost_to_go(t, u1, v);
        const double change = J[index(F)] - base[index(F)];
        ++report.follower_samples;
        if (change < report.min_follower_change) {
          report.min_follower_change = change;
          report.worst_follower_timestep = t;
        }
      } catch (const CostDomainError&) {
        ++report.skipped_samples;
      }
    }

    for (int k = 0; k < options.leader_samples_per_timestep && uL.size() > 0; ++k) {
      const Vector v = uL + sphere_sample(static_cast<int>(uL.size()), options.radius, rng);
      try {
        const Vector w = follower_response(tail, t, F, v, uF);
        const auto J = L == Agent::kOne ? tail.cost_to_go(t, v, w) : tail.cost_to_go(t, w, v);
        const double change = J[index(L)] - base[index(L)];
        ++report.leader_samples;
        if (change < report.min_leader_change) {
          report.min_leader_change = change;
          report.worst_leader_timestep = t;
        }
      } catch (const CostDomainError&) {
        ++report.skipped_samples;
      }
    }
  }
  return report;
}

}  // namespace stackelberg
