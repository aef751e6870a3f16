#include "stackelberg/scripted_maneuvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stackelberg {
namespace {

double smoothstep(double u) { return u <= 0.0 ? 0.0 : u >= 1.0 ? 1.0 : u * u * (3.0 - 2.0 * u); }

// Integral of smoothstep from 0 to u.
double smoothstep_integral(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 0.5 + (u - 1.0);
  return u * u * u - 0.5 * u * u * u * u;
}

double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

double ManeuverScript::lateral_at(double t) const {
  double x = x0;
  for (const auto& s : lateral) x += s.delta * smoothstep((t - s.start) / s.duration);
  return x;
}

double ManeuverScript::speed_at(double t) const {
  double v = v0;
  for (const auto& s : speed) v += s.delta * smoothstep((t - s.start) / s.duration);
  return v;
}

double ManeuverScript::station_at(double t) const {
  double y = y0 + v0 * t;
  for (const auto& s : speed) y += s.delta * s.duration * smoothstep_integral((t - s.start) / s.duration);
  return y;
}

Vector ManeuverScript::initial_state() const {
  Vector x(4);
  x << x0, y0, std::numbers::pi / 2.0, v0;
  return x;
}

ScriptedTruth track_scripts(const TwoAgentModel& model, const std::array<ManeuverScript, 2>& scripts, int T,
                            const ControlLimits& limits, double tolerance) {
  for (Agent a : {Agent::kOne, Agent::kTwo})
    if (model.agent(a).name() != "unicycle") throw std::invalid_argument("track_scripts: unicycle agents required");
  if (T < 1) throw std::invalid_argument("track_scripts: horizon must be >= 1");
  const double dt = model.dt();

  ScriptedTruth out;
  Vector x(8);
  x << scripts[0].initial_state(), scripts[1].initial_state();
  out.states.push_back(x);
  for (int t = 0; t < T; ++t) {
    std::array<Vector, 2> u{Vector::Zero(2), Vector::Zero(2)};
    for (Agent a : {Agent::kOne, Agent::kTwo}) {
      const ManeuverScript& s = scripts[index(a)];
      if (s.coast || t + 1 >= T) continue;
      const auto xa = x.segment(model.offset(a), 4);
      const double h = xa(Unicycle::kHeading), v = xa(Unicycle::kSpeed);
      const double nx = xa(Unicycle::kPx) + dt * v * std::cos(h);
      const double ny = xa(Unicycle::kPy) + dt * v * std::sin(h);
      const double tt = (t + 2) * dt;
      const double dx = s.lateral_at(tt) - nx, dy = s.station_at(tt) - ny;
      const double v_des = std::hypot(dx, dy) / dt;
      const double h_des = v_des > 1e-9 ? std::atan2(dy, dx) : h;
      u[index(a)](Unicycle::kYawRate) =
          std::clamp(wrap(h_des - h) / dt, -limits.max_yaw_rate, limits.max_yaw_rate);
      u[index(a)](Unicycle::kAccel) = std::clamp((v_des - v) / dt, -limits.max_accel, limits.max_accel);
    }
    out.controls[Agent::kOne].push_back(u[0]);
    out.controls[Agent::kTwo].push_back(u[1]);
    if (t + 1 < T) {
      x = model.step(x, u[0], u[1], t);
      out.states.push_back(x);
    }
  }

  for (Agent a : {Agent::kOne, Agent::kTwo}) {
    const ManeuverScript& s = scripts[index(a)];
    const int o = model.offset(a);
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
      const double e = std::hypot(out.states[t](o) - s.lateral_at(t * dt), out.states[t](o + 1) - s.station_at(t * dt));
      worst = std::max(worst, e);
    }
    out.max_tracking_error[index(a)] = worst;
    if (worst > tolerance)
      throw ScriptError("agent " + std::to_string(label(a)) + " strays " + std::to_string(worst) +
                        " m from its script (tolerance " + std::to_string(tolerance) + " m)");
  }
  return out;
}

}  // namespace stackelberg
