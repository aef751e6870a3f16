#include "stackelberg/road.hpp"

namespace stackelberg {

RoadGeometry::RoadGeometry(Layout layout, double w, double merge_start, double merge_length, double length)
    : layout_(layout), w_(w), merge_start_(merge_start), merge_length_(merge_length), length_(length) {
  if (!(w > 0.0)) throw std::invalid_argument("road: lane width must be positive");
  if (!(length > 0.0)) throw std::invalid_argument("road: length must be positive");
  if (layout == Layout::kMerging && (!(merge_start >= 0.0) || !(merge_length > 0.0)))
    throw std::invalid_argument("road: merge section lengths must be positive");
}

RoadGeometry RoadGeometry::two_way(double lane_width, double length) {
  return RoadGeometry(Layout::kTwoWay, lane_width, 0.0, 0.0, length);
}

RoadGeometry RoadGeometry::merging(double lane_width, double lanes_length, double merge_length, double length) {
  return RoadGeometry(Layout::kMerging, lane_width, lanes_length, merge_length, length);
}

double RoadGeometry::width(double y) const {
  if (layout_ == Layout::kTwoWay || y < merge_start_) return 2.0 * w_;
  if (y >= merge_end()) return w_;
  return 2.0 * w_ - w_ * (y - merge_start_) / merge_length_;
}

LaneBounds RoadGeometry::bounds(double y, Agent agent) const {
  if (layout_ == Layout::kTwoWay) return {-w_, w_, 0.0, 0.0};
  if (y < merge_start_) return agent == Agent::kOne ? LaneBounds{-w_, 0.0, 0.0, 0.0} : LaneBounds{0.0, w_, 0.0, 0.0};
  const double half = 0.5 * width(y);
  // d(half)/dy inside the taper; the left bound moves right as the road narrows.
  const double slope = y < merge_end() ? -0.5 * w_ / merge_length_ : 0.0;
  return {-half, half, -slope, slope};
}

double RoadGeometry::lane_center(Agent agent) const {
  if (layout_ == Layout::kTwoWay) return 0.5 * w_;
  return agent == Agent::kOne ? -0.5 * w_ : 0.5 * w_;
}

}  // namespace stackelberg
