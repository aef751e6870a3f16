#pragma once

#include <memory>
#include <string>

#include "stackelberg/types.hpp"

namespace stackelberg {

/// Jacobians of the transition rule about one expansion point.
struct LinearizedDynamics {
  Matrix A;                 // n x n
  std::array<Matrix, 2> B;  // n x m_i
};

/// Discrete-time two-agent transition x_{t+1} = f_t(x_t, u1_t, u2_t).
///
/// Subclasses implement do_step(). The default do_linearize() uses central
/// differences, so user models only need the transition rule; the built-in
/// models override it with exact Jacobians.
class DynamicsModel {
 public:
  DynamicsModel(int n, int m1, int m2, double dt);
  virtual ~DynamicsModel() = default;

  int state_dim() const { return n_; }
  int control_dim(Agent a) const { return m_[index(a)]; }
  double dt() const { return dt_; }

  /// Throws std::invalid_argument on dimension mismatch.
  Vector step(const Vector& x, const Vector& u1, const Vector& u2, int t = 0) const;
  LinearizedDynamics linearize(const Vector& x, const Vector& u1, const Vector& u2, int t = 0) const;

  /// Joint-state indices (px, py) of an agent's planar position. Models
  /// without a planar interpretation throw std::logic_error.
  virtual std::array<int, 2> position_indices(Agent a) const;
  /// Column labels for traces, e.g. "x1_px".
  virtual std::vector<std::string> state_labels() const;

 protected:
  virtual Vector do_step(const Vector& x, const Vector& u1, const Vector& u2, int t) const = 0;
  virtual LinearizedDynamics do_linearize(const Vector& x, const Vector& u1, const Vector& u2, int t) const;

 private:
  void check_dims(const Vector& x, const Vector& u1, const Vector& u2) const;

  int n_;
  std::array<int, 2> m_;
  double dt_;
};

/// Single-agent planar model used as one block of a TwoAgentModel.
class AgentDynamics {
 public:
  virtual ~AgentDynamics() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual void step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
                    Eigen::Ref<Vector> next) const = 0;
  /// Writes the exact Jacobians into the provided blocks.
  virtual void jacobians(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
                         Eigen::Ref<Matrix> A, Eigen::Ref<Matrix> B) const = 0;
  virtual std::array<int, 2> position_indices() const = 0;
  virtual std::vector<std::string> state_names() const = 0;
  virtual std::string name() const = 0;
};

/// State [px, vx, py, vy], control [ax, ay]; forward Euler.
class DoubleIntegrator2D final : public AgentDynamics {
 public:
  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }
  void step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
            Eigen::Ref<Vector> next) const override;
  void jacobians(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
                 Eigen::Ref<Matrix> A, Eigen::Ref<Matrix> B) const override;
  std::array<int, 2> position_indices() const override { return {0, 2}; }
  std::vector<std::string> state_names() const override { return {"px", "vx", "py", "vy"}; }
  std::string name() const override { return "double_integrator"; }
};

/// State [px, py, heading, speed], control [yaw rate, acceleration];
/// forward Euler.
class Unicycle final : public AgentDynamics {
 public:
  static constexpr int kPx = 0, kPy = 1, kHeading = 2, kSpeed = 3;
  static constexpr int kYawRate = 0, kAccel = 1;

  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }
  void step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
            Eigen::Ref<Vector> next) const override;
  void jacobians(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
                 Eigen::Ref<Matrix> A, Eigen::Ref<Matrix> B) const override;
  std::array<int, 2> position_indices() const override { return {kPx, kPy}; }
  std::vector<std::string> state_names() const override { return {"px", "py", "heading", "speed"}; }
  std::string name() const override { return "unicycle"; }
};

/// Block-diagonal joint model: x = [x^(1); x^(2)], each agent driven only by
/// its own controls.
class TwoAgentModel final : public DynamicsModel {
 public:
  TwoAgentModel(std::shared_ptr<const AgentDynamics> agent1, std::shared_ptr<const AgentDynamics> agent2,
                double dt);

  const AgentDynamics& agent(Agent a) const { return *agents_[index(a)]; }
  /// Offset of an agent's block in the joint state.
  int offset(Agent a) const { return a == Agent::kOne ? 0 : agents_[0]->state_dim(); }

  std::array<int, 2> position_indices(Agent a) const override;
  std::vector<std::string> state_labels() const override;

 protected:
  Vector do_step(const Vector& x, const Vector& u1, const Vector& u2, int t) const override;
  LinearizedDynamics do_linearize(const Vector& x, const Vector& u1, const Vector& u2, int t) const override;

 private:
  std::array<std::shared_ptr<const AgentDynamics>, 2> agents_;
};

/// x_{t+1} = A x_t + B1 u1_t + B2 u2_t with constant matrices.
class LinearModel final : public DynamicsModel {
 public:
  LinearModel(Matrix A, Matrix B1, Matrix B2, double dt);

 protected:
  Vector do_step(const Vector& x, const Vector& u1, const Vector& u2, int t) const override;
  LinearizedDynamics do_linearize(const Vector& x, const Vector& u1, const Vector& u2, int t) const override;

 private:
  LinearizedDynamics lin_;
};

std::shared_ptr<TwoAgentModel> make_double_integrator_game(double dt);
std::shared_ptr<TwoAgentModel> make_unicycle_game(double dt);

/// Forward simulation. Returns T states with states[0] = x1; the last control
/// of each sequence is not applied.
StateSequence rollout(const DynamicsModel& model, const Vector& x1, const JointControls& controls);

}  // namespace stackelberg
