#pragma once

#include "stackelberg/driving_costs.hpp"

namespace stackelberg {

/// Straight roads along +y. Two layouts:
///
///  * two-way: lanes [-w, 0] and [0, w] with the center line at x = 0; each
///    agent may use the whole road.
///  * merging: for y < lanes_end each agent has its own lane, agent 1 on
///    [-w, 0] and agent 2 on [0, w], split by a barrier at x = 0. The road
///    then narrows linearly from 2w to w over merge_length and continues as a
///    single lane [-w/2, w/2].
class RoadGeometry final : public LaneBoundaries {
 public:
  enum class Layout { kTwoWay, kMerging };

  static RoadGeometry two_way(double lane_width, double length);
  static RoadGeometry merging(double lane_width, double lanes_length, double merge_length, double length);

  LaneBounds bounds(double station, Agent agent) const override;
  /// Total drivable width at a station (both lanes before the merge).
  double width(double station) const;

  Layout layout() const { return layout_; }
  double lane_width() const { return w_; }
  double length() const { return length_; }
  double merge_start() const { return merge_start_; }
  double merge_end() const { return merge_start_ + merge_length_; }
  /// Center x of an agent's starting lane (the right-hand lane on a
  /// two-way road).
  double lane_center(Agent agent) const;

 private:
  RoadGeometry(Layout layout, double w, double merge_start, double merge_length, double length);

  Layout layout_;
  double w_;
  double merge_start_ = 0.0;
  double merge_length_ = 0.0;
  double length_;
};

}  // namespace stackelberg
