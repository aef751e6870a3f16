#include "stackelberg/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stackelberg {

QuadraticApproximation QuadraticApproximation::zero(Agent owner, int n, int m1, int m2) {
  QuadraticApproximation a;
  a.owner = owner;
  a.Q = Matrix::Zero(n, n);
  a.q = Vector::Zero(n);
  a.R = {Matrix::Zero(m1, m1), Matrix::Zero(m2, m2)};
  a.r = {Vector::Zero(m1), Vector::Zero(m2)};
  return a;
}

double QuadraticApproximation::model(const Vector& dx, const Vector& du1, const Vector& du2) const {
  double v = c + q.dot(dx) + 0.5 * dx.dot(Q * dx);
  v += r[0].dot(du1) + 0.5 * du1.dot(R[0] * du1);
  v += r[1].dot(du2) + 0.5 * du2.dot(R[1] * du2);
  return v;
}

QuadraticApproximation StageCost::quadraticize(const Vector& x, const Vector& u1, const Vector& u2) const {
  auto out = QuadraticApproximation::zero(owner_, static_cast<int>(x.size()), static_cast<int>(u1.size()),
                                          static_cast<int>(u2.size()));
  accumulate(x, u1, u2, 1.0, out);
  return out;
}

double sum_objective(const StageCost& cost, const StateSequence& states, const JointControls& controls) {
  const std::size_t T = states.size();
  if (controls[Agent::kOne].size() != T || controls[Agent::kTwo].size() != T)
    throw std::invalid_argument("sum_objective: states and controls must share a length");
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    total += cost.evaluate(states[t], controls[Agent::kOne][t], controls[Agent::kTwo][t]);
  return total;
}

QuadraticApproximation convexify(QuadraticApproximation approx, double nu) {
  if (nu < 0.0) throw std::invalid_argument("convexify: nu must be non-negative");
  if (nu == 0.0) return approx;
  approx.Q.diagonal().array() += nu;
  for (auto& R : approx.R) R.diagonal().array() += nu;
  return approx;
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return std::numeric_limits<double>::infinity();
  if (symmetric.rows() == 1) return symmetric(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double auto_nu(const QuadraticApproximation& approx, double margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("auto_nu: margin must be positive");
  double nu = 0.0;
  nu = std::max(nu, margin - min_eigenvalue(approx.Q));
  nu = std::max(nu, margin - min_eigenvalue(approx.R[index(approx.owner)]));
  return nu;
}

namespace {

// Semidefinite check without a full eigendecomposition; LDLT with pivoting
// handles singular PSD matrices.
bool is_psd(const Matrix& m) {
  if (m.size() == 0) return true;
  if (m.isZero(0.0)) return true;
  if (m.rows() == 1) return m(0, 0) >= 0.0;
  Eigen::LDLT<Matrix> ldlt(m);
  if (ldlt.info() != Eigen::Success) return false;
  const double tol = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  return (ldlt.vectorD().array() >= -tol).all();
}

bool is_pd(const Matrix& m) {
  if (m.size() == 0) return true;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

double neg_log(double arg, const char* term) {
  if (!(arg > 0.0)) throw CostDomainError(term, "log argument " + std::to_string(arg) + " is not positive");
  return -std::log(arg);
}

}  // namespace

bool meets_lq_precondition(const QuadraticApproximation& approx) {
  const int own = index(approx.owner);
  return is_psd(approx.Q) && is_pd(approx.R[own]) && is_psd(approx.R[1 - own]);
}

QuadraticCost::QuadraticCost(Agent owner, Matrix Q, Vector q, Matrix R1, Vector r1, Matrix R2, Vector r2,
                             double c)
    : StageCost(owner), Q_(std::move(Q)), q_(std::move(q)), R_{std::move(R1), std::move(R2)},
      r_{std::move(r1), std::move(r2)}, c_(c) {
  if (Q_.rows() != Q_.cols() || q_.size() != Q_.rows() || R_[0].rows() != r_[0].size() ||
      R_[1].rows() != r_[1].size())
    throw std::invalid_argument("QuadraticCost: inconsistent shapes");
}

double QuadraticCost::evaluate(const Vector& x, const Vector& u1, const Vector& u2) const {
  return c_ + q_.dot(x) + 0.5 * x.dot(Q_ * x) + r_[0].dot(u1) + 0.5 * u1.dot(R_[0] * u1) + r_[1].dot(u2) +
         0.5 * u2.dot(R_[1] * u2);
}

void QuadraticCost::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                               QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  out.q += weight * (q_ + Q_ * x);
  out.Q += weight * Q_;
  out.r[0] += weight * (r_[0] + R_[0] * u1);
  out.R[0] += weight * R_[0];
  out.r[1] += weight * (r_[1] + R_[1] * u2);
  out.R[1] += weight * R_[1];
}

double SquaredDistanceToOrigin::evaluate(const Vector& x, const Vector&, const Vector&) const {
  return x(pos_[0]) * x(pos_[0]) + x(pos_[1]) * x(pos_[1]);
}

void SquaredDistanceToOrigin::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                                         QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  for (int k : pos_) {
    out.q(k) += weight * 2.0 * x(k);
    out.Q(k, k) += weight * 2.0;
  }
}

double SquaredSeparation::evaluate(const Vector& x, const Vector&, const Vector&) const {
  const double dx = x(a_[0]) - x(b_[0]), dy = x(a_[1]) - x(b_[1]);
  return dx * dx + dy * dy;
}

void SquaredSeparation::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                                   QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  for (int d = 0; d < 2; ++d) {
    const int a = a_[d], b = b_[d];
    const double diff = x(a) - x(b);
    out.q(a) += weight * 2.0 * diff;
    out.q(b) -= weight * 2.0 * diff;
    out.Q(a, a) += weight * 2.0;
    out.Q(b, b) += weight * 2.0;
    out.Q(a, b) -= weight * 2.0;
    out.Q(b, a) -= weight * 2.0;
  }
}

double ControlEffort::evaluate(const Vector&, const Vector& u1, const Vector& u2) const {
  return owner() == Agent::kOne ? u1.squaredNorm() : u2.squaredNorm();
}

void ControlEffort::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                               QuadraticApproximation& out) const {
  const int i = index(owner());
  const Vector& u = i == 0 ? u1 : u2;
  out.c += weight * evaluate(x, u1, u2);
  out.r[i] += weight * 2.0 * u;
  out.R[i].diagonal().array() += weight * 2.0;
}

SquareBarrier::SquareBarrier(Agent owner, std::array<int, 2> position, double half_width)
    : StageCost(owner), pos_(position), s_(half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("SquareBarrier: half-width must be positive");
}

double SquareBarrier::evaluate(const Vector& x, const Vector&, const Vector&) const {
  double v = 0.0;
  for (int k : pos_) v += neg_log(s_ - x(k), "square_barrier") + neg_log(x(k) + s_, "square_barrier");
  return v;
}

void SquareBarrier::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                               QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  for (int k : pos_) {
    const double hi = s_ - x(k), lo = x(k) + s_;
    out.q(k) += weight * (1.0 / hi - 1.0 / lo);
    out.Q(k, k) += weight * (1.0 / (hi * hi) + 1.0 / (lo * lo));
  }
}

WeightedCost::WeightedCost(Agent owner, std::vector<Term> terms) : StageCost(owner), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (!(t.weight > 0.0)) throw std::invalid_argument("WeightedCost: weights must be strictly positive");
    if (!t.cost) throw std::invalid_argument("WeightedCost: null term");
    if (t.cost->owner() != owner) throw std::invalid_argument("WeightedCost: term owner mismatch");
  }
}

double WeightedCost::evaluate(const Vector& x, const Vector& u1, const Vector& u2) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.weight * t.cost->evaluate(x, u1, u2);
  return v;
}

void WeightedCost::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                              QuadraticApproximation& out) const {
  for (const auto& t : terms_) t.cost->accumulate(x, u1, u2, weight * t.weight, out);
}

bool WeightedCost::analytic_derivatives() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.cost->analytic_derivatives(); });
}

StageCostPtr shepherd_cost(std::array<int, 2> sheep_position) {
  return std::make_shared<WeightedCost>(
      Agent::kOne, std::vector<WeightedCost::Term>{
                       {1.0, std::make_shared<SquaredDistanceToOrigin>(Agent::kOne, sheep_position)},
                       {1.0, std::make_shared<ControlEffort>(Agent::kOne)}});
}

StageCostPtr sheep_cost(std::array<int, 2> shepherd_position, std::array<int, 2> sheep_position) {
  return std::make_shared<WeightedCost>(
      Agent::kTwo, std::vector<WeightedCost::Term>{
                       {1.0, std::make_shared<SquaredSeparation>(Agent::kTwo, shepherd_position, sheep_position)},
                       {1.0, std::make_shared<ControlEffort>(Agent::kTwo)}});
}

StageCostPtr barrier_shepherd_cost(std::array<int, 2> sheep_position, double half_width) {
  return std::make_shared<WeightedCost>(
      Agent::kOne, std::vector<WeightedCost::Term>{
                       {1.0, std::make_shared<SquaredDistanceToOrigin>(Agent::kOne, sheep_position)},
                       {1.0, std::make_shared<ControlEffort>(Agent::kOne)},
                       {1.0, std::make_shared<SquareBarrier>(Agent::kOne, sheep_position, half_width)}});
}

}  // namespace stackelberg
