#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace stackelberg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// State trajectory x_1..x_T, one entry per timestep.
using StateSequence = std::vector<Vector>;
/// One agent's controls u_1..u_T. The final entry is unused by the dynamics
/// but kept so costs can be evaluated at every stage.
using ControlSequence = std::vector<Vector>;

/// Two-agent identifier. Agent 1's state block precedes agent 2's in every
/// joint state vector.
enum class Agent : int { kOne = 0, kTwo = 1 };

constexpr int index(Agent a) { return static_cast<int>(a); }
constexpr Agent other(Agent a) { return a == Agent::kOne ? Agent::kTwo : Agent::kOne; }
/// 1-based label used in files and on the command line.
constexpr int label(Agent a) { return index(a) + 1; }

inline Agent agent_from_label(int l) {
  if (l != 1 && l != 2) throw std::invalid_argument("agent label must be 1 or 2, got " + std::to_string(l));
  return l == 1 ? Agent::kOne : Agent::kTwo;
}

/// Per-agent control sequences, indexed by index(Agent).
struct JointControls {
  std::array<ControlSequence, 2> seq;

  ControlSequence& operator[](Agent a) { return seq[index(a)]; }
  const ControlSequence& operator[](Agent a) const { return seq[index(a)]; }
  std::size_t horizon() const { return seq[0].size(); }
};

inline JointControls zero_controls(int horizon, int m1, int m2) {
  JointControls c;
  c.seq[0].assign(horizon, Vector::Zero(m1));
  c.seq[1].assign(horizon, Vector::Zero(m2));
  return c;
}

}  // namespace stackelberg
