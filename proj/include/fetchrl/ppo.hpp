#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fetchrl/checkpoint.hpp"
#include "fetchrl/env.hpp"
#include "fetchrl/eval.hpp"
#include "fetchrl/optimizer.hpp"
#include "fetchrl/policy.hpp"

namespace fetchrl {

/// One environment's slice of a rollout.
struct Trajectory {
  std::size_t feature_size = 0;
  std::size_t context_size = 0;
  std::vector<double> features;  // T x feature_size
  std::vector<double> context;   // T x context_size
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<std::uint8_t> dones;
  std::vector<StepOutcome> outcomes;
  std::vector<EpisodeRecord> finished;  // episodes that ended in this slice
  double bootstrap_value = 0.0;         // V(s_T)

  std::size_t size() const { return actions.size(); }
  std::span<const double> features_at(std::size_t t) const {
    return {features.data() + t * feature_size, feature_size};
  }
  std::span<const double> context_at(std::size_t t) const {
    return {context.data() + t * context_size, context_size};
  }
};

/// Gathers exactly `horizon` steps, spread round-robin over `envs` (env i
/// gets ceil/floor of horizon / envs). Actions are drawn from `rng` in
/// (step, env) order.
std::vector<Trajectory> collect_rollout(std::vector<FetchEnv>& envs,
                                        const PolicyParams& params, int horizon,
                                        Rng& rng);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t,
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}, returns = A + V.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value,
                      double gamma_discount, double gae_lambda);

/// In place: mean 0, population std 1 (only centred if the std is 0).
void normalize_advantages(std::span<double> advantages);

struct TrainConfig {
  double learning_rate = 3e-4;
  double gamma_discount = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int minibatch_size = 64;
  int epochs_per_update = 4;
  int rollout_horizon = 2048;
  int num_envs = 8;
  std::int64_t total_steps = 200000;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  // Global gradient-norm clip before each optimizer step; 0 disables.
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  int eval_interval = 10;         // updates between evaluations; 0 disables
  int eval_episodes_per_scene = 10;
  int early_stop_patience = 5;    // evaluations; 0 disables
  double early_stop_min_delta = 1.0;  // success-rate points
  std::uint64_t seed = 1;

  void validate() const;
  LossSpec loss_spec() const { return {clip_epsilon, value_coef, entropy_coef}; }
};

struct UpdateStats {
  std::int64_t step = 0;  // environment steps so far
  double mean_reward = 0.0;   // mean return of episodes finished in the rollout
  double success_rate = 0.0;  // % of episodes finished in the rollout
  int episodes = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  // Diagnostics of the very first minibatch, taken before any optimizer
  // step of this update (new params == old params there).
  double first_minibatch_approx_kl = 0.0;
  double first_minibatch_max_ratio_error = 0.0;
};

struct EvalPoint {
  std::int64_t step = 0;
  double success_rate = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "step,mean_reward,success_rate,policy_loss,value_loss,entropy,clip_fraction,approx_kl,"
    "grad_norm";

std::string format_metrics_row(const UpdateStats& s);

/// Everything `train` needs besides the scene library.
struct TrainSetup {
  TrainConfig train;
  EnvConfig env;
  NetworkSpec network;  // input_channels / window are overwritten from mode
  ObservationMode mode = ObservationMode::Enhanced;
  PolicyMode eval_policy = PolicyMode::Stochastic;
};

/// Network spec with the input shape implied by the observation mode.
NetworkSpec network_for(const TrainSetup& setup);

struct TrainResult {
  PolicyParams params;
  AdamState optimizer;
  std::vector<UpdateStats> updates;
  std::vector<EvalPoint> evaluations;
  bool stopped_early = false;
};

/// Runs PPO. With `out_dir` set, writes checkpoint.bin, metrics.csv and
/// eval.csv there; on failure whatever state exists is flushed before the
/// exception propagates.
TrainResult train(const TrainSetup& setup, const SceneLibrary& library,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                  const std::function<void(const UpdateStats&)>& on_update = {});

/// One PPO update (advantage estimation, normalisation, epochs of shuffled
/// minibatches) on an already collected rollout. Exposed for tests.
UpdateStats ppo_update(PolicyParams& params, AdamState& adam,
                       const std::vector<Trajectory>& rollout, const TrainConfig& cfg,
                       Rng& rng);

}  // namespace fetchrl
