#include "stackelberg/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace stackelberg {

DynamicsModel::DynamicsModel(int n, int m1, int m2, double dt) : n_(n), m_{m1, m2}, dt_(dt) {
  if (n <= 0 || m1 < 0 || m2 < 0) throw std::invalid_argument("invalid model dimensions");
  if (!(dt > 0.0)) throw std::invalid_argument("sampling period must be positive");
}

void DynamicsModel::check_dims(const Vector& x, const Vector& u1, const Vector& u2) const {
  if (x.size() != n_ || u1.size() != m_[0] || u2.size() != m_[1]) {
    std::ostringstream os;
    os << "dimension mismatch: expected x(" << n_ << "), u1(" << m_[0] << "), u2(" << m_[1] << "); got x("
       << x.size() << "), u1(" << u1.size() << "), u2(" << u2.size() << ")";
    throw std::invalid_argument(os.str());
  }
}

Vector DynamicsModel::step(const Vector& x, const Vector& u1, const Vector& u2, int t) const {
  check_dims(x, u1, u2);
  return do_step(x, u1, u2, t);
}

LinearizedDynamics DynamicsModel::linearize(const Vector& x, const Vector& u1, const Vector& u2, int t) const {
  check_dims(x, u1, u2);
  return do_linearize(x, u1, u2, t);
}

LinearizedDynamics DynamicsModel::do_linearize(const Vector& x, const Vector& u1, const Vector& u2,
                                               int t) const {
  constexpr double h = 1e-6;
  LinearizedDynamics lin;
  lin.A.resize(n_, n_);
  Vector xp = x, xm = x;
  for (int j = 0; j < n_; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    lin.A.col(j) = (do_step(xp, u1, u2, t) - do_step(xm, u1, u2, t)) / (2.0 * h);
    xp(j) = xm(j) = x(j);
  }
  const std::array<const Vector*, 2> us{&u1, &u2};
  for (int i = 0; i < 2; ++i) {
    lin.B[i].resize(n_, m_[i]);
    for (int j = 0; j < m_[i]; ++j) {
      Vector up = *us[i], um = *us[i];
      up(j) += h;
      um(j) -= h;
      const Vector fp = i == 0 ? do_step(x, up, u2, t) : do_step(x, u1, up, t);
      const Vector fm = i == 0 ? do_step(x, um, u2, t) : do_step(x, u1, um, t);
      lin.B[i].col(j) = (fp - fm) / (2.0 * h);
    }
  }
  return lin;
}

std::array<int, 2> DynamicsModel::position_indices(Agent) const {
  throw std::logic_error("model has no planar position layout");
}

std::vector<std::string> DynamicsModel::state_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < n_; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

void DoubleIntegrator2D::step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
                              Eigen::Ref<Vector> next) const {
  next(0) = x(0) + dt * x(1);
  next(1) = x(1) + dt * u(0);
  next(2) = x(2) + dt * x(3);
  next(3) = x(3) + dt * u(1);
}

void DoubleIntegrator2D::jacobians(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&, double dt,
                                   Eigen::Ref<Matrix> A, Eigen::Ref<Matrix> B) const {
  A.setIdentity();
  A(0, 1) = dt;
  A(2, 3) = dt;
  B.setZero();
  B(1, 0) = dt;
  B(3, 1) = dt;
}

void Unicycle::step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, double dt,
                    Eigen::Ref<Vector> next) const {
  const double psi = x(kHeading), v = x(kSpeed);
  next(kPx) = x(kPx) + dt * v * std::cos(psi);
  next(kPy) = x(kPy) + dt * v * std::sin(psi);
  next(kHeading) = psi + dt * u(kYawRate);
  next(kSpeed) = v + dt * u(kAccel);
}

void Unicycle::jacobians(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>&, double dt,
                         Eigen::Ref<Matrix> A, Eigen::Ref<Matrix> B) const {
  const double psi = x(kHeading), v = x(kSpeed);
  const double c = std::cos(psi), s = std::sin(psi);
  A.setIdentity();
  A(kPx, kHeading) = -dt * v * s;
  A(kPx, kSpeed) = dt * c;
  A(kPy, kHeading) = dt * v * c;
  A(kPy, kSpeed) = dt * s;
  B.setZero();
  B(kHeading, kYawRate) = dt;
  B(kSpeed, kAccel) = dt;
}

TwoAgentModel::TwoAgentModel(std::shared_ptr<const AgentDynamics> agent1,
                             std::shared_ptr<const AgentDynamics> agent2, double dt)
    : DynamicsModel(agent1->state_dim() + agent2->state_dim(), agent1->control_dim(), agent2->control_dim(), dt),
      agents_{std::move(agent1), std::move(agent2)} {}

std::array<int, 2> TwoAgentModel::position_indices(Agent a) const {
  auto local = agent(a).position_indices();
  return {offset(a) + local[0], offset(a) + local[1]};
}

std::vector<std::string> TwoAgentModel::state_labels() const {
  std::vector<std::string> out;
  for (Agent a : {Agent::kOne, Agent::kTwo})
    for (const auto& s : agent(a).state_names()) out.push_back("x" + std::to_string(label(a)) + "_" + s);
  return out;
}

Vector TwoAgentModel::do_step(const Vector& x, const Vector& u1, const Vector& u2, int) const {
  Vector next(state_dim());
  const int n1 = agents_[0]->state_dim(), n2 = agents_[1]->state_dim();
  agents_[0]->step(x.head(n1), u1, dt(), next.head(n1));
  agents_[1]->step(x.tail(n2), u2, dt(), next.tail(n2));
  return next;
}

LinearizedDynamics TwoAgentModel::do_linearize(const Vector& x, const Vector& u1, const Vector& u2, int) const {
  const int n = state_dim();
  const int n1 = agents_[0]->state_dim(), n2 = agents_[1]->state_dim();
  LinearizedDynamics lin;
  lin.A = Matrix::Zero(n, n);
  lin.B[0] = Matrix::Zero(n, control_dim(Agent::kOne));
  lin.B[1] = Matrix::Zero(n, control_dim(Agent::kTwo));
  agents_[0]->jacobians(x.head(n1), u1, dt(), lin.A.topLeftCorner(n1, n1), lin.B[0].topRows(n1));
  agents_[1]->jacobians(x.tail(n2), u2, dt(), lin.A.bottomRightCorner(n2, n2), lin.B[1].bottomRows(n2));
  return lin;
}

LinearModel::LinearModel(Matrix A, Matrix B1, Matrix B2, double dt)
    : DynamicsModel(static_cast<int>(A.rows()), static_cast<int>(B1.cols()), static_cast<int>(B2.cols()), dt) {
  if (A.cols() != A.rows() || B1.rows() != A.rows() || B2.rows() != A.rows())
    throw std::invalid_argument("LinearModel: inconsistent matrix shapes");
  lin_.A = std::move(A);
  lin_.B = {std::move(B1), std::move(B2)};
}

Vector LinearModel::do_step(const Vector& x, const Vector& u1, const Vector& u2, int) const {
  return lin_.A * x + lin_.B[0] * u1 + lin_.B[1] * u2;
}

LinearizedDynamics LinearModel::do_linearize(const Vector&, const Vector&, const Vector&, int) const {
  return lin_;
}

std::shared_ptr<TwoAgentModel> make_double_integrator_game(double dt) {
  auto di = std::make_shared<DoubleIntegrator2D>();
  return std::make_shared<TwoAgentModel>(di, di, dt);
}

std::shared_ptr<TwoAgentModel> make_unicycle_game(double dt) {
  auto uni = std::make_shared<Unicycle>();
  return std::make_shared<TwoAgentModel>(uni, uni, dt);
}

StateSequence rollout(const DynamicsModel& model, const Vector& x1, const JointControls& controls) {
  const std::size_t T = controls[Agent::kOne].size();
  if (T == 0 || controls[Agent::kTwo].size() != T)
    throw std::invalid_argument("rollout: control sequences must share a nonzero length");
  if (x1.size() != model.state_dim()) throw std::invalid_argument("rollout: initial state has wrong dimension");
  StateSequence xs;
  xs.reserve(T);
  xs.push_back(x1);
  for (std::size_t t = 0; t + 1 < T; ++t)
    xs.push_back(model.step(xs[t], controls[Agent::kOne][t], controls[Agent::kTwo][t], static_cast<int>(t)));
  return xs;
}

}  // namespace stackelberg
