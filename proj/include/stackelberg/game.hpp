#pragma once

#include <memory>

#include "stackelberg/costs.hpp"
#include "stackelberg/dynamics.hpp"

namespace stackelberg {

/// Immutable problem statement: dynamics, one stage cost per agent, horizon
/// and leader.
struct GameDefinition {
  std::shared_ptr<const DynamicsModel> model;
  std::array<StageCostPtr, 2> costs;
  int horizon = 1;
  Agent leader = Agent::kOne;

  const StageCost& cost(Agent a) const { return *costs[index(a)]; }
  /// Throws std::invalid_argument when the pieces do not fit together.
  void validate() const;
};

inline void GameDefinition::validate() const {
  if (!model) throw std::invalid_argument("game: missing dynamics model");
  if (!costs[0] || !costs[1]) throw std::invalid_argument("game: missing stage cost");
  if (costs[0]->owner() != Agent::kOne || costs[1]->owner() != Agent::kTwo)
    throw std::invalid_argument("game: costs[i] must belong to agent i");
  if (horizon < 1) throw std::invalid_argument("game: horizon must be >= 1");
}

}  // namespace stackelberg
