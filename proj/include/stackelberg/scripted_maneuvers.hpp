#pragma once

#include <vector>

#include "stackelberg/dynamics.hpp"

namespace stackelberg {

/// A smoothstep change of `delta` over [start, start + duration].
struct ProfileSegment {
  double start = 0.0;
  double duration = 1.0;
  double delta = 0.0;
};

/// Planar reference for one unicycle driving along +y: lateral position and
/// forward speed are each a base value plus smoothstep changes.
struct ManeuverScript {
  double x0 = 0.0;
  double y0 = 0.0;
  double v0 = 0.0;
  std::vector<ProfileSegment> lateral;
  std::vector<ProfileSegment> speed;
  /// Zero controls throughout; the reference is then a straight line.
  bool coast = false;

  double lateral_at(double t) const;
  double speed_at(double t) const;
  double station_at(double t) const;
  /// Initial unicycle state [px, py, heading, speed], heading along +y.
  Vector initial_state() const;
};

struct ControlLimits {
  double max_yaw_rate = 2.0;
  double max_accel = 9.0;
};

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScriptedTruth {
  StateSequence states;
  JointControls controls;
  std::array<double, 2> max_tracking_error{};
};

/// Recovers bounded controls that make each unicycle follow its script and
/// returns the realized trajectory. Each step picks the heading and speed
/// that would land the next-but-one position on the reference, then clamps
/// the implied yaw rate and acceleration. Throws ScriptError when the
/// realized path strays more than `tolerance` from the reference.
ScriptedTruth track_scripts(const TwoAgentModel& model, const std::array<ManeuverScript, 2>& scripts, int horizon,
                            const ControlLimits& limits, double tolerance);

}  // namespace stackelberg
