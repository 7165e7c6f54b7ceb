#include "fetchrl/reward.hpp"

#include <limits>

namespace fetchrl {

void RewardWeights::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("reward.alpha must be non-negative");
  if (!(beta >= 0.0)) throw ConfigError("reward.beta must be non-negative");
  if (!(gamma_pen >= 0.0)) throw ConfigError("reward.gamma_pen must be non-negative");
}

RewardBreakdown compute_reward(int prev_d, int new_d, const StepOutcome& outcome,
                               const RewardWeights& weights) {
  if (prev_d < 0 || new_d < 0) {
    throw ContractViolation("compute_reward: distance must be finite");
  }
  RewardBreakdown r;
  r.delta_d = prev_d - new_d;
  r.success = outcome.success ? 1 : 0;
  r.penalty = (outcome.collided || outcome.invalid_action) ? 1 : 0;
  r.total = weights.alpha * r.delta_d + weights.beta * r.success -
            weights.gamma_pen * r.penalty;
  return r;
}

int distance_to_target(const WorldState& state) {
  if (state.agent.holding) {
    for (const auto& obj : state.objects) {
      if (obj.instance_id == *state.agent.holding &&
          obj.class_id == state.target_class) {
        return 0;
      }
    }
  }
  int best = std::numeric_limits<int>::max();
  for (const auto& obj : state.objects) {
    if (obj.held || obj.class_id != state.target_class || !obj.pickupable) continue;
    if (auto d = shortest_path_length(state.map(), state.agent.cell, obj.cell())) {
      best = std::min(best, *d);
    }
  }
  if (best == std::numeric_limits<int>::max()) {
    throw ContractViolation("distance_to_target: no reachable target");
  }
  return best;
}

}  // namespace fetchrl
