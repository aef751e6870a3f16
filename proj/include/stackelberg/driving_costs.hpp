#pragma once

#include <memory>

#include "stackelberg/costs.hpp"

namespace stackelberg {

/// Lateral (x) road limits at a longitudinal station y, with their slopes
/// dx/dy. Left is the smaller x: motion is along +y and the transverse
/// direction is -x.
struct LaneBounds {
  double left = 0.0;
  double right = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
};

/// Source of per-agent lane limits, implemented by the road geometries.
class LaneBoundaries {
 public:
  virtual ~LaneBoundaries() = default;
  virtual LaneBounds bounds(double station, Agent agent) const = 0;
};

/// Joint-state indices of one unicycle agent.
struct UnicycleIndices {
  int px, py, heading, speed;
  static UnicycleIndices for_offset(int offset) { return {offset, offset + 1, offset + 2, offset + 3}; }
  std::array<int, 2> position() const { return {px, py}; }
};

/// Weighted Euclidean distance sqrt(sum_k w_k (x_k - goal_k)^2 + eps^2) over
/// the agent's [px, py, heading, speed] block. eps = 1e-6 keeps the Hessian
/// finite at the goal itself.
class GoalDistance final : public StageCost {
 public:
  GoalDistance(Agent owner, UnicycleIndices idx, Eigen::Vector4d goal, Eigen::Vector4d weights);
  std::string name() const override { return "goal_distance"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  std::array<int, 4> idx_;
  Eigen::Vector4d goal_, w_;
};

/// -log(||p_i - p_j||^2 - d_c).
class CollisionBarrier final : public StageCost {
 public:
  CollisionBarrier(Agent owner, std::array<int, 2> own, std::array<int, 2> other, double radius);
  std::string name() const override { return "collision_barrier"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  std::array<int, 2> own_, other_;
  double dc_;
};

/// -log(v_m - |v|) - log(dpsi_m - |psi - psi_r|).
///
/// The absolute values have a kink at zero; there the gradient is taken as 0
/// and the curvature as the one-sided limit 1/a^2.
class SpeedHeadingBarrier final : public StageCost {
 public:
  SpeedHeadingBarrier(Agent owner, UnicycleIndices idx, double speed_limit, double max_heading_dev,
                      double road_heading);
  std::string name() const override { return "speed_heading_barrier"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  UnicycleIndices idx_;
  double vm_, dpsi_m_, psi_r_;
};

/// -log(||p_llb - p||^2) - log(||p_rlb - p||^2), with each boundary point
/// taken at the vehicle's own longitudinal station, so the squared distance
/// is (px - x_boundary(py))^2.
class LaneBoundaryBarrier final : public StageCost {
 public:
  LaneBoundaryBarrier(Agent owner, UnicycleIndices idx, std::shared_ptr<const LaneBoundaries> road);
  std::string name() const override { return "lane_boundary_barrier"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  UnicycleIndices idx_;
  std::shared_ptr<const LaneBoundaries> road_;
};

/// exp(-1/2 (p_cl - p)' C^{-1} (p_cl - p)) with p_cl = (center_x, py) and a
/// diagonal C. Because the center-line point shares the vehicle's station
/// the longitudinal variance drops out; it is kept for completeness.
class CenterLineGaussian final : public StageCost {
 public:
  CenterLineGaussian(Agent owner, UnicycleIndices idx, double center_x, double sigma_x, double sigma_y);
  std::string name() const override { return "center_line_gaussian"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  UnicycleIndices idx_;
  double cx_, sx_, sy_;
};

/// Weights and parameters of the six driving subobjectives.
struct DrivingCostParams {
  Eigen::Vector4d goal;                             // [px, py, heading, speed]
  Eigen::Vector4d goal_weights{1.0, 1.0, 1.0, 0.1};  // per-entry weights of the goal distance
  double speed_limit = 35.0;
  double max_heading_dev = 1.0471975511965976;  // pi / 3
  double road_heading = 1.5707963267948966;     // +y
  double collision_radius = 0.2;
  double center_x = 0.0;
  double center_sigma_x = 1.25;
  double center_sigma_y = 1e3;
  bool use_center_line = true;
  // w_1 .. w_6: goal, collision, speed/heading, control effort, lane, center line.
  std::array<double, 6> weights{1.0, 1.0, 1.0, 0.1, 1.0, 1.0};
};

/// Weighted sum of the driving subobjectives for one agent of a two-unicycle
/// game (agent 1 block at offset 0, agent 2 at offset 4).
StageCostPtr driving_cost(Agent owner, const DrivingCostParams& params, std::shared_ptr<const LaneBoundaries> road);

}  // namespace stackelberg
