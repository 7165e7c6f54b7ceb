#include "fetchrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace fetchrl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(gamma_discount > 0.0 && gamma_discount <= 1.0)) {
    throw ConfigError("train.gamma_discount must be in (0, 1]");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("train.gae_lambda must be in [0, 1]");
  }
  if (!(clip_epsilon > 0.0)) throw ConfigError("train.clip_epsilon must be > 0");
  if (minibatch_size < 1) throw ConfigError("train.minibatch_size must be >= 1");
  if (epochs_per_update < 1) throw ConfigError("train.epochs_per_update must be >= 1");
  if (rollout_horizon < 1) throw ConfigError("train.rollout_horizon must be >= 1");
  if (num_envs < 1) throw ConfigError("train.num_envs must be >= 1");
  if (total_steps < 1) throw ConfigError("train.total_steps must be >= 1");
  if (value_coef < 0.0 || entropy_coef < 0.0) {
    throw ConfigError("train.value_coef and train.entropy_coef must be >= 0");
  }
  if (max_grad_norm < 0.0) throw ConfigError("train.max_grad_norm must be >= 0");
  if (eval_interval < 0 || eval_episodes_per_scene < 0 || early_stop_patience < 0) {
    throw ConfigError("train.eval_interval, eval_episodes_per_scene and "
                      "early_stop_patience must be >= 0");
  }
}

std::vector<Trajectory> collect_rollout(std::vector<FetchEnv>& envs,
                                        const PolicyParams& params, int horizon,
                                        Rng& rng) {
  if (envs.empty()) throw ContractViolation("collect_rollout: no environments");
  if (horizon < 1) throw ContractViolation("collect_rollout: horizon must be >= 1");
  const std::size_t n = envs.size();
  const std::size_t h = static_cast<std::size_t>(horizon);
  std::vector<std::size_t> quota(n, h / n);
  for (std::size_t i = 0; i < h % n; ++i) ++quota[i];

  std::vector<Trajectory> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& obs = envs[i].observation();
    out[i].feature_size = obs.features.size();
    out[i].context_size = obs.context.size();
    out[i].features.reserve(quota[i] * obs.features.size());
    out[i].context.reserve(quota[i] * obs.context.size());
  }

  ForwardCache cache;
  const std::size_t longest = quota.front();
  for (std::size_t t = 0; t < longest; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (t >= quota[i]) continue;
      Trajectory& tr = out[i];
      const Observation& obs = envs[i].observation();
      const PolicyOutput& po = forward(params, obs.features.data(), obs.context, cache);
      const SampledAction a = sample_action(po, rng);
      tr.features.insert(tr.features.end(), obs.features.data().begin(),
                         obs.features.data().end());
      tr.context.insert(tr.context.end(), obs.context.begin(), obs.context.end());
      tr.actions.push_back(a.action);
      tr.values.push_back(po.value);
      tr.log_probs.push_back(a.log_prob);
      Transition step = envs[i].step(a.action);
      tr.rewards.push_back(step.reward.total);
      tr.dones.push_back(step.done ? 1 : 0);
      tr.outcomes.push_back(step.outcome);
      if (step.finished) tr.finished.push_back(*step.finished);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& obs = envs[i].observation();
    out[i].bootstrap_value = forward(params, obs.features.data(), obs.context, cache).value;
  }
  std::erase_if(out, [](const Trajectory& t) { return t.size() == 0; });
  return out;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value,
                      double gamma_discount, double gae_lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw ShapeMismatch("compute_gae: rewards, values and dones must align");
  }
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma_discount * next_value * live - values[k];
    next_adv = delta + gamma_discount * gae_lambda * live * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return r;
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : adv) ss += (a - mean) * (a - mean);
  const double sd = std::sqrt(ss / n);
  for (double& a : adv) a = sd > 0.0 ? (a - mean) / sd : a - mean;
}

std::string format_metrics_row(const UpdateStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%lld,%.6f,%.4f,%.8f,%.8f,%.8f,%.6f,%.8f,%.8f",
                static_cast<long long>(s.step), s.mean_reward, s.success_rate,
                s.policy_loss, s.value_loss, s.entropy, s.clip_fraction, s.approx_kl,
                s.grad_norm);
  return buf;
}

NetworkSpec network_for(const TrainSetup& setup) {
  NetworkSpec spec = setup.network;
  spec.input_channels = channel_count(setup.mode);
  spec.window = setup.env.perception.window();
  spec.context_units = kNumClasses;
  spec.action_count = kActionCount;
  spec.validate();
  return spec;
}

UpdateStats ppo_update(PolicyParams& params, AdamState& adam,
                       const std::vector<Trajectory>& rollout, const TrainConfig& cfg,
                       Rng& rng) {
  std::vector<TrainingSample> samples;
  for (const Trajectory& tr : rollout) {
    const GaeResult gae = compute_gae(tr.rewards, tr.values, tr.dones, tr.bootstrap_value,
                                      cfg.gamma_discount, cfg.gae_lambda);
    for (std::size_t t = 0; t < tr.size(); ++t) {
      samples.push_back({tr.features_at(t), tr.context_at(t), tr.actions[t],
                         tr.log_probs[t], gae.advantages[t], gae.returns[t]});
    }
  }
  if (samples.empty()) throw ContractViolation("ppo_update: empty rollout");
  if (cfg.normalize_advantages && samples.size() > 1) {
    std::vector<double> adv(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) adv[i] = samples[i].advantage;
    normalize_advantages(adv);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].advantage = adv[i];
  }

  const LossSpec loss = cfg.loss_spec();
  UpdateStats st;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingSample> batch;
  int batches = 0;
  ForwardCache cache;
  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(samples[order[k]]);

      if (batches == 0) {
        for (const auto& s : batch) {
          const PolicyOutput& out = forward(params, s.features, s.context, cache);
          const double ratio = out.probs[s.action] / std::exp(s.old_log_prob);
          st.first_minibatch_max_ratio_error =
              std::max(st.first_minibatch_max_ratio_error, std::abs(ratio - 1.0));
        }
      }

      BackwardResult br = backward(params, batch, loss);
      if (batches == 0) st.first_minibatch_approx_kl = br.stats.approx_kl;
      const double norm = l2_norm(br.gradient);
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
        const double scale = cfg.max_grad_norm / norm;
        for (double& g : br.gradient) g *= scale;
      }
      optimizer_step(params.values(), br.gradient, adam, cfg.learning_rate);

      st.policy_loss += br.stats.policy_loss;
      st.value_loss += br.stats.value_loss;
      st.entropy += br.stats.entropy;
      st.clip_fraction += br.stats.clip_fraction;
      st.approx_kl += br.stats.approx_kl;
      st.grad_norm += norm;
      ++batches;
    }
  }
  const double inv = 1.0 / batches;
  st.policy_loss *= inv;
  st.value_loss *= inv;
  st.entropy *= inv;
  st.clip_fraction *= inv;
  st.approx_kl *= inv;
  st.grad_norm *= inv;
  return st;
}

namespace {

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalPoint>& points) {
  std::ofstream os(path, std::ios::trunc);
  os << "step,success_rate\n";
  for (const auto& p : points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%lld,%.4f\n", static_cast<long long>(p.step),
                  p.success_rate);
    os << buf;
  }
}

}  // namespace

TrainResult train(const TrainSetup& setup, const SceneLibrary& library,
                  const std::optional<std::filesystem::path>& out_dir,
                  const std::function<void(const UpdateStats&)>& on_update) {
  const TrainConfig& cfg = setup.train;
  cfg.validate();
  setup.env.perception.validate();
  setup.env.reward.validate();
  const NetworkSpec spec = network_for(setup);

  TrainResult result{init_params(spec, derive_seed(cfg.seed, 1)), AdamState(0), {}, {}, false};
  result.optimizer = AdamState(result.params.size());

  std::vector<FetchEnv> envs;
  envs.reserve(static_cast<std::size_t>(cfg.num_envs));
  for (int i = 0; i < cfg.num_envs; ++i) {
    envs.emplace_back(library, setup.env, setup.mode,
                      derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(i)));
  }
  Rng rollout_rng(derive_seed(cfg.seed, 2));
  Rng update_rng(derive_seed(cfg.seed, 3));

  std::ofstream metrics;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    metrics.open(*out_dir / "metrics.csv", std::ios::trunc);
    if (!metrics) throw Error("cannot write " + (*out_dir / "metrics.csv").string());
    metrics << kMetricsHeader << "\n";
  }
  auto flush = [&] {
    if (!out_dir) return;
    metrics.flush();
    save_checkpoint(*out_dir / "checkpoint.bin", {result.params, result.optimizer});
    write_eval_csv(*out_dir / "eval.csv", result.evaluations);
  };

  try {
    std::int64_t steps = 0;
    int updates = 0;
    double best_eval = -1.0;
    int stale_evals = 0;
    while (steps < cfg.total_steps) {
      const int horizon =
          static_cast<int>(std::min<std::int64_t>(cfg.rollout_horizon, cfg.total_steps - steps));
      const auto rollout = collect_rollout(envs, result.params, horizon, rollout_rng);
      steps += horizon;

      UpdateStats st = ppo_update(result.params, result.optimizer, rollout, cfg, update_rng);
      st.step = steps;
      double reward_sum = 0.0;
      int wins = 0;
      for (const auto& tr : rollout) {
        for (const auto& rec : tr.finished) {
          reward_sum += rec.cumulative_reward;
          wins += rec.success ? 1 : 0;
          ++st.episodes;
        }
      }
      st.mean_reward = st.episodes ? reward_sum / st.episodes : 0.0;
      st.success_rate = st.episodes ? 100.0 * wins / st.episodes : 0.0;
      result.updates.push_back(st);
      ++updates;
      if (out_dir) metrics << format_metrics_row(st) << "\n";
      if (on_update) on_update(st);

      if (cfg.eval_interval > 0 && cfg.eval_episodes_per_scene > 0 &&
          updates % cfg.eval_interval == 0) {
        EvalConfig ec;
        ec.scenes = setup.env.sampler.scenes;
        ec.episodes_per_scene = cfg.eval_episodes_per_scene;
        ec.seed = derive_seed(cfg.seed, 4);
        ec.policy_mode = setup.eval_policy;
        const auto records = run_evaluation(result.params, library, setup.env, setup.mode, ec);
        const double sr = success_rate(records);
        result.evaluations.push_back({steps, sr});
        if (sr > best_eval + cfg.early_stop_min_delta) {
          best_eval = sr;
          stale_evals = 0;
        } else {
          ++stale_evals;
        }
        if (cfg.early_stop_patience > 0 && stale_evals >= cfg.early_stop_patience) {
          result.stopped_early = true;
          break;
        }
      }
    }
  } catch (...) {
    flush();
    throw;
  }
  flush();
  return result;
}

}  // namespace fetchrl
