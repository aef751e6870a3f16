#include "stackelberg/driving_costs.hpp"

#include <cmath>

namespace stackelberg {
namespace {

constexpr double kGoalEpsSq = 1e-12;

double checked_log_arg(double arg, const char* term) {
  if (!(arg > 0.0)) throw CostDomainError(term, "log argument " + std::to_string(arg) + " is not positive");
  return arg;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

GoalDistance::GoalDistance(Agent owner, UnicycleIndices idx, Eigen::Vector4d goal, Eigen::Vector4d weights)
    : StageCost(owner), idx_{idx.px, idx.py, idx.heading, idx.speed}, goal_(goal), w_(weights) {
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("GoalDistance: negative weight");
}

double GoalDistance::evaluate(const Vector& x, const Vector&, const Vector&) const {
  double s = kGoalEpsSq;
  for (int k = 0; k < 4; ++k) {
    const double e = x(idx_[k]) - goal_(k);
    s += w_(k) * e * e;
  }
  return std::sqrt(s);
}

void GoalDistance::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                              QuadraticApproximation& out) const {
  const double d = evaluate(x, u1, u2);
  Eigen::Vector4d we;
  for (int k = 0; k < 4; ++k) we(k) = w_(k) * (x(idx_[k]) - goal_(k));
  out.c += weight * d;
  for (int a = 0; a < 4; ++a) {
    out.q(idx_[a]) += weight * we(a) / d;
    for (int b = 0; b < 4; ++b) {
      double h = -we(a) * we(b) / (d * d * d);
      if (a == b) h += w_(a) / d;
      out.Q(idx_[a], idx_[b]) += weight * h;
    }
  }
}

CollisionBarrier::CollisionBarrier(Agent owner, std::array<int, 2> own, std::array<int, 2> other, double radius)
    : StageCost(owner), own_(own), other_(other), dc_(radius) {}

double CollisionBarrier::evaluate(const Vector& x, const Vector&, const Vector&) const {
  const double dx = x(own_[0]) - x(other_[0]), dy = x(own_[1]) - x(other_[1]);
  return -std::log(checked_log_arg(dx * dx + dy * dy - dc_, "collision_barrier"));
}

void CollisionBarrier::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                                  QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  const double d[2] = {x(own_[0]) - x(other_[0]), x(own_[1]) - x(other_[1])};
  const double a = d[0] * d[0] + d[1] * d[1] - dc_;
  // a(p_i, p_j) with grad_{p_i} a = 2d, grad_{p_j} a = -2d.
  const int idx[4] = {own_[0], own_[1], other_[0], other_[1]};
  const double ga[4] = {2 * d[0], 2 * d[1], -2 * d[0], -2 * d[1]};
  const double sgn[4] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    out.q(idx[i]) += weight * (-ga[i] / a);
    for (int j = 0; j < 4; ++j) {
      const double haa = (i % 2 == j % 2) ? 2.0 * sgn[i] * sgn[j] : 0.0;
      out.Q(idx[i], idx[j]) += weight * (-haa / a + ga[i] * ga[j] / (a * a));
    }
  }
}

SpeedHeadingBarrier::SpeedHeadingBarrier(Agent owner, UnicycleIndices idx, double speed_limit,
                                         double max_heading_dev, double road_heading)
    : StageCost(owner), idx_(idx), vm_(speed_limit), dpsi_m_(max_heading_dev), psi_r_(road_heading) {}

double SpeedHeadingBarrier::evaluate(const Vector& x, const Vector&, const Vector&) const {
  const double a1 = checked_log_arg(vm_ - std::abs(x(idx_.speed)), "speed_barrier");
  const double a2 = checked_log_arg(dpsi_m_ - std::abs(x(idx_.heading) - psi_r_), "heading_barrier");
  return -std::log(a1) - std::log(a2);
}

void SpeedHeadingBarrier::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                                     QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  const double v = x(idx_.speed), e = x(idx_.heading) - psi_r_;
  const double a1 = vm_ - std::abs(v), a2 = dpsi_m_ - std::abs(e);
  out.q(idx_.speed) += weight * sign(v) / a1;
  out.Q(idx_.speed, idx_.speed) += weight / (a1 * a1);
  out.q(idx_.heading) += weight * sign(e) / a2;
  out.Q(idx_.heading, idx_.heading) += weight / (a2 * a2);
}

LaneBoundaryBarrier::LaneBoundaryBarrier(Agent owner, UnicycleIndices idx,
                                         std::shared_ptr<const LaneBoundaries> road)
    : StageCost(owner), idx_(idx), road_(std::move(road)) {
  if (!road_) throw std::invalid_argument("LaneBoundaryBarrier: null road");
}

double LaneBoundaryBarrier::evaluate(const Vector& x, const Vector&, const Vector&) const {
  const LaneBounds b = road_->bounds(x(idx_.py), owner());
  const double dl = x(idx_.px) - b.left, dr = x(idx_.px) - b.right;
  return -std::log(checked_log_arg(dl * dl, "left_lane_barrier")) -
         std::log(checked_log_arg(dr * dr, "right_lane_barrier"));
}

void LaneBoundaryBarrier::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                                     QuadraticApproximation& out) const {
  out.c += weight * evaluate(x, u1, u2);
  const LaneBounds b = road_->bounds(x(idx_.py), owner());
  // f = -2 log|d|, d = px - boundary(py): df/dd = -2/d, d2f/dd2 = 2/d^2.
  for (const auto& [boundary, slope] : {std::pair{b.left, b.left_slope}, std::pair{b.right, b.right_slope}}) {
    const double d = x(idx_.px) - boundary;
    const double g[2] = {1.0, -slope};
    const int ids[2] = {idx_.px, idx_.py};
    for (int i = 0; i < 2; ++i) {
      out.q(ids[i]) += weight * (-2.0 / d) * g[i];
      for (int j = 0; j < 2; ++j) out.Q(ids[i], ids[j]) += weight * (2.0 / (d * d)) * g[i] * g[j];
    }
  }
}

CenterLineGaussian::CenterLineGaussian(Agent owner, UnicycleIndices idx, double center_x, double sigma_x,
                                       double sigma_y)
    : StageCost(owner), idx_(idx), cx_(center_x), sx_(sigma_x), sy_(sigma_y) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw std::invalid_argument("CenterLineGaussian: sigma must be positive");
}

double CenterLineGaussian::evaluate(const Vector& x, const Vector&, const Vector&) const {
  const double e = x(idx_.px) - cx_;
  return std::exp(-0.5 * e * e / (sx_ * sx_));
}

void CenterLineGaussian::accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                                    QuadraticApproximation& out) const {
  const double f = evaluate(x, u1, u2);
  const double e = x(idx_.px) - cx_, s2 = sx_ * sx_;
  out.c += weight * f;
  out.q(idx_.px) += weight * (-e / s2) * f;
  out.Q(idx_.px, idx_.px) += weight * (e * e / (s2 * s2) - 1.0 / s2) * f;
}

StageCostPtr driving_cost(Agent owner, const DrivingCostParams& p, std::shared_ptr<const LaneBoundaries> road) {
  const auto own = UnicycleIndices::for_offset(owner == Agent::kOne ? 0 : 4);
  const auto oth = UnicycleIndices::for_offset(owner == Agent::kOne ? 4 : 0);
  std::vector<WeightedCost::Term> terms{
      {p.weights[0], std::make_shared<GoalDistance>(owner, own, p.goal, p.goal_weights)},
      {p.weights[1], std::make_shared<CollisionBarrier>(owner, own.position(), oth.position(), p.collision_radius)},
      {p.weights[2],
       std::make_shared<SpeedHeadingBarrier>(owner, own, p.speed_limit, p.max_heading_dev, p.road_heading)},
      {p.weights[3], std::make_shared<ControlEffort>(owner)},
      {p.weights[4], std::make_shared<LaneBoundaryBarrier>(owner, own, std::move(road))},
  };
  if (p.use_center_line)
    terms.push_back({p.weights[5], std::make_shared<CenterLineGaussian>(owner, own, p.center_x, p.center_sigma_x,
                                                                        p.center_sigma_y)});
  return std::make_shared<WeightedCost>(owner, std::move(terms));
}

}  // namespace stackelberg
