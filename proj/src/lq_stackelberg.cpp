#include "stackelberg/lq_stackelberg.hpp"

namespace stackelberg {
namespace {

constexpr double kIllConditioned = 1e-10;

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Factorizes a symmetric positive definite matrix; records ill-conditioning.
Eigen::LLT<Matrix> factor(const Matrix& S, int t, const char* which, AffineStrategy& out) {
  Eigen::LLT<Matrix> llt(symmetrized(S));
  if (llt.info() != Eigen::Success) throw LQSolverError(t, std::string(which) + " matrix is not positive definite");
  if (S.size() > 0 && llt.rcond() < kIllConditioned) out.ill_conditioned.push_back(t);
  return llt;
}

}  // namespace

AffineStrategy solve_lq_stackelberg(const LQGame& game) {
  const int T = game.horizon();
  if (T < 1) throw std::invalid_argument("solve_lq_stackelberg: empty game");
  const Agent L = game.leader, F = other(game.leader);
  const int l = index(L), f = index(F);
  const int n = static_cast<int>(game.stages[0].dynamics.A.rows());

  AffineStrategy out;
  for (int i = 0; i < 2; ++i) {
    out.P[i].resize(T);
    out.p[i].resize(T);
  }

  // Terminal stage: controls only affect their own stage cost.
  std::array<Matrix, 2> Z;
  std::array<Vector, 2> zeta;
  {
    const LQStage& st = game.stages[T - 1];
    for (int i = 0; i < 2; ++i) {
      const auto& c = st.costs[i];
      const int m = static_cast<int>(c.R[i].rows());
      auto llt = factor(c.R[i], T - 1, i == l ? "leader" : "follower", out);
      out.P[i][T - 1] = Matrix::Zero(m, n);
      out.p[i][T - 1] = llt.solve(c.r[i]);
      Z[i] = c.Q;
      zeta[i] = c.q;
    }
  }

  for (int t = T - 2; t >= 0; --t) {
    const LQStage& st = game.stages[t];
    const Matrix& A = st.dynamics.A;
    const Matrix& BL = st.dynamics.B[l];
    const Matrix& BF = st.dynamics.B[f];
    const QuadraticApproximation& cl = st.costs[l];
    const QuadraticApproximation& cf = st.costs[f];

    // Follower reaction u_F = Kx x + Ku u_L + k to any leader control.
    const Matrix BFtZF = BF.transpose() * Z[f];
    auto follower = factor(cf.R[f] + BFtZF * BF, t, "follower", out);
    const Matrix Kx = -follower.solve(BFtZF * A);
    const Matrix Ku = -follower.solve(BFtZF * BL);
    const Vector k = -follower.solve(BF.transpose() * zeta[f] + cf.r[f]);

    // Leader sees x' = At x + Bt u_L + ct once the reaction is substituted.
    const Matrix At = A + BF * Kx;
    const Matrix Bt = BL + BF * Ku;
    const Vector ct = BF * k;
    const Matrix BtZL = Bt.transpose() * Z[l];
    const Matrix KutRLF = Ku.transpose() * cl.R[f];
    auto leader = factor(cl.R[l] + KutRLF * Ku + BtZL * Bt, t, "leader", out);
    const Matrix PL = leader.solve(KutRLF * Kx + BtZL * At);
    const Vector pL = leader.solve(cl.r[l] + Ku.transpose() * (cl.R[f] * k + cl.r[f]) +
                                   Bt.transpose() * (Z[l] * ct + zeta[l]));
    const Matrix PF = Ku * PL - Kx;
    const Vector pF = Ku * pL - k;

    out.P[l][t] = PL;
    out.p[l][t] = pL;
    out.P[f][t] = PF;
    out.p[f][t] = pF;

    // Cost-to-go under the closed loop x' = Fcl x + beta.
    const Matrix Fcl = A - BL * PL - BF * PF;
    const Vector beta = -BL * pL - BF * pF;
    std::array<const Matrix*, 2> Ps{&out.P[0][t], &out.P[1][t]};
    std::array<const Vector*, 2> ps{&out.p[0][t], &out.p[1][t]};
    for (int i = 0; i < 2; ++i) {
      const QuadraticApproximation& c = st.costs[i];
      Vector zeta_next = c.q + Fcl.transpose() * (zeta[i] + Z[i] * beta);
      Matrix Z_next = c.Q + Fcl.transpose() * Z[i] * Fcl;
      for (int j = 0; j < 2; ++j) {
        zeta_next += Ps[j]->transpose() * (c.R[j] * *ps[j] - c.r[j]);
        Z_next += Ps[j]->transpose() * c.R[j] * *Ps[j];
      }
      Z[i] = symmetrized(Z_next);
      zeta[i] = std::move(zeta_next);
    }
  }
  return out;
}

Trajectory apply(const AffineStrategy& strategy, const DynamicsModel& model, const Vector& x1) {
  const int T = strategy.horizon();
  Trajectory traj;
  traj.states.reserve(T);
  traj.states.push_back(x1);
  for (Agent a : {Agent::kOne, Agent::kTwo}) traj.controls[a].reserve(T);
  for (int t = 0; t < T; ++t) {
    const Vector& x = traj.states[t];
    traj.controls[Agent::kOne].push_back(strategy.control(Agent::kOne, t, x));
    traj.controls[Agent::kTwo].push_back(strategy.control(Agent::kTwo, t, x));
    if (t + 1 < T)
      traj.states.push_back(model.step(x, traj.controls[Agent::kOne][t], traj.controls[Agent::kTwo][t], t));
  }
  return traj;
}

Trajectory apply(const AffineStrategy& strategy, const LQGame& game, const Vector& x1) {
  const int T = strategy.horizon();
  Trajectory traj;
  traj.states.push_back(x1);
  for (int t = 0; t < T; ++t) {
    const Vector& x = traj.states[t];
    const Vector u1 = strategy.control(Agent::kOne, t, x);
    const Vector u2 = strategy.control(Agent::kTwo, t, x);
    if (t + 1 < T) {
      const auto& d = game.stages[t].dynamics;
      traj.states.push_back(d.A * x + d.B[0] * u1 + d.B[1] * u2);
    }
    traj.controls[Agent::kOne].push_back(u1);
    traj.controls[Agent::kTwo].push_back(u2);
  }
  return traj;
}

LQGame lq_game_about(const GameDefinition& game, const StateSequence& states, const JointControls& controls) {
  const int T = static_cast<int>(states.size());
  LQGame lq;
  lq.leader = game.leader;
  lq.stages.resize(T);
  for (int t = 0; t < T; ++t) {
    const Vector& x = states[t];
    const Vector& u1 = controls[Agent::kOne][t];
    const Vector& u2 = controls[Agent::kTwo][t];
    lq.stages[t].dynamics = game.model->linearize(x, u1, u2, t);
    for (Agent a : {Agent::kOne, Agent::kTwo}) lq.stages[t].costs[index(a)] = game.cost(a).quadraticize(x, u1, u2);
  }
  return lq;
}

LQGame lq_game_at_origin(const GameDefinition& game) {
  const auto& m = *game.model;
  StateSequence xs(game.horizon, Vector::Zero(m.state_dim()));
  return lq_game_about(game, xs, zero_controls(game.horizon, m.control_dim(Agent::kOne), m.control_dim(Agent::kTwo)));
}

}  // namespace stackelberg
