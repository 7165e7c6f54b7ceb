#pragma once

#include <span>

#include "fetchrl/policy.hpp"

namespace fetchrl {

/// One sample's clipped surrogate, already negated for minimisation:
/// -min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
struct SurrogateTerm {
  double value = 0.0;
  // d value / d new_log_prob; zero when the clipped branch binds.
  double grad_log_prob = 0.0;
  double ratio = 1.0;
  bool clipped = false;
};

SurrogateTerm clipped_surrogate(double new_log_prob, double old_log_prob,
                                double advantage, double clip_epsilon);

struct PpoLoss {
  double total = 0.0;
  double policy_term = 0.0;   // -mean(min(...))
  double value_term = 0.0;    // value_coef * mean((V - R)^2)
  double entropy_term = 0.0;  // -entropy_coef * mean(H)
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Composite PPO loss over aligned per-sample arrays.
PpoLoss ppo_loss(std::span<const double> new_log_prob,
                 std::span<const double> old_log_prob,
                 std::span<const double> advantage,
                 std::span<const double> value_pred,
                 std::span<const double> return_target,
                 std::span<const double> entropy, const LossSpec& spec);

}  // namespace fetchrl
