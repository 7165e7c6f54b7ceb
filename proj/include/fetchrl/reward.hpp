#pragma once

#include "fetchrl/scene.hpp"

namespace fetchrl {

/// r_t = alpha * delta_d + beta * success - gamma_pen * penalty.
/// `gamma_pen` is the penalty weight, not the discount factor.
struct RewardWeights {
  double alpha = 1.0;
  double beta = 10.0;
  double gamma_pen = 0.5;

  void validate() const;
};

struct RewardBreakdown {
  int delta_d = 0;
  int success = 0;
  int penalty = 0;
  double total = 0.0;
};

RewardBreakdown compute_reward(int prev_d, int new_d, const StepOutcome& outcome,
                               const RewardWeights& weights);

/// BFS distance from the agent to the nearest target-class object on the
/// grid; 0 while a target is held. Throws ContractViolation if no target
/// is reachable.
int distance_to_target(const WorldState& state);

}  // namespace fetchrl
