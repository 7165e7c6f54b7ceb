#include "fetchrl/ppo_loss.hpp"

#include <algorithm>
#include <cmath>

namespace fetchrl {

SurrogateTerm clipped_surrogate(double new_log_prob, double old_log_prob,
                                double advantage, double clip_epsilon) {
  SurrogateTerm t;
  t.ratio = std::exp(new_log_prob - old_log_prob);
  if (!std::isfinite(t.ratio)) {
    throw NumericalError("ppo_loss: non-finite probability ratio");
  }
  const double clipped_ratio =
      std::clamp(t.ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  const double unclipped = t.ratio * advantage;
  const double clipped = clipped_ratio * advantage;
  // The clipped branch binds only when it is strictly smaller; at equality the
  // ratio is inside the trust region and the gradient flows.
  t.clipped = clipped < unclipped;
  t.value = -std::min(unclipped, clipped);
  t.grad_log_prob = t.clipped ? 0.0 : -advantage * t.ratio;
  return t;
}

PpoLoss ppo_loss(std::span<const double> new_log_prob,
                 std::span<const double> old_log_prob,
                 std::span<const double> advantage,
                 std::span<const double> value_pred,
                 std::span<const double> return_target,
                 std::span<const double> entropy, const LossSpec& spec) {
  const std::size_t n = new_log_prob.size();
  if (n == 0 || old_log_prob.size() != n || advantage.size() != n ||
      value_pred.size() != n || return_target.size() != n || entropy.size() != n) {
    throw ShapeMismatch("ppo_loss: arrays must be non-empty and aligned");
  }
  PpoLoss out;
  double clipped = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SurrogateTerm s =
        clipped_surrogate(new_log_prob[i], old_log_prob[i], advantage[i],
                          spec.clip_epsilon);
    out.policy_term += s.value;
    if (s.clipped) clipped += 1.0;
    out.approx_kl += (s.ratio - 1.0) - std::log(s.ratio);
    const double err = value_pred[i] - return_target[i];
    out.value_term += err * err;
    out.entropy_term += entropy[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.policy_term *= inv;
  out.value_term *= spec.value_coef * inv;
  out.entropy_term *= -spec.entropy_coef * inv;
  out.clip_fraction = clipped * inv;
  out.approx_kl *= inv;
  out.total = out.policy_term + out.value_term + out.entropy_term;
  return out;
}

}  // namespace fetchrl
