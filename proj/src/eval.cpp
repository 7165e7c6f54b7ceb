#include "fetchrl/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace fetchrl {

std::string_view to_string(PolicyMode m) {
  return m == PolicyMode::Greedy ? "greedy" : "stochastic";
}

std::optional<PolicyMode> policy_mode_from_string(std::string_view s) {
  if (s == "greedy") return PolicyMode::Greedy;
  if (s == "stochastic") return PolicyMode::Stochastic;
  return std::nullopt;
}

std::vector<EpisodeRecord> run_evaluation(const PolicyParams& params,
                                          const SceneLibrary& library,
                                          const EnvConfig& env, ObservationMode mode,
                                          const EvalConfig& eval) {
  if (params.spec().input_channels != channel_count(mode) ||
      params.spec().window != env.perception.window()) {
    throw ShapeMismatch("checkpoint network expects " +
                        std::to_string(params.spec().input_channels) + "x" +
                        std::to_string(params.spec().window) + "x" +
                        std::to_string(params.spec().window) + " observations, " +
                        std::string(to_string(mode)) + " encoder produces " +
                        std::to_string(channel_count(mode)) + "x" +
                        std::to_string(env.perception.window()) + "x" +
                        std::to_string(env.perception.window()));
  }
  std::vector<EpisodeRecord> records;
  ForwardCache cache;
  for (int scene : eval.scenes) {
    SamplerConfig sc = env.sampler;
    sc.scenes = {scene};
    EpisodeSampler sampler(library, sc, derive_seed(eval.seed, static_cast<std::uint64_t>(scene)));
    for (int e = 0; e < eval.episodes_per_scene; ++e) {
      const EpisodeSpec spec = sampler.next();
      FetchEnv instance(library, env, mode, spec);
      Rng action_rng(derive_seed(spec.rng_seed, 0xac7));
      while (true) {
        const Observation& obs = instance.observation();
        const PolicyOutput& out = forward(params, obs.features.data(), obs.context, cache);
        const SampledAction a = eval.policy_mode == PolicyMode::Greedy
                                    ? greedy_action(out)
                                    : sample_action(out, action_rng);
        Transition tr = instance.step(a.action);
        if (tr.done) {
          records.push_back(*tr.finished);
          break;
        }
      }
    }
  }
  return records;
}

double success_rate(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw ContractViolation("success_rate: no episodes");
  int wins = 0;
  for (const auto& r : records) wins += r.success ? 1 : 0;
  return 100.0 * wins / static_cast<double>(records.size());
}

double average_cumulative_reward(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw ContractViolation("average_cumulative_reward: no episodes");
  double sum = 0.0;
  for (const auto& r : records) sum += r.cumulative_reward;
  return sum / static_cast<double>(records.size());
}

std::optional<double> navigation_efficiency(const std::vector<EpisodeRecord>& records) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records) {
    if (!r.success) continue;
    sum += r.optimal_path == 0
               ? 100.0
               : 100.0 * r.optimal_path / static_cast<double>(std::max(r.move_count, 1));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> interaction_efficiency(const std::vector<EpisodeRecord>& records) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records) {
    if (!r.success) continue;
    sum += r.pickup_attempts;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

SeedSummary summarize(const std::vector<EpisodeRecord>& records) {
  SeedSummary s;
  s.success_rate_pct = success_rate(records);
  s.avg_cumulative_reward = average_cumulative_reward(records);
  s.navigation_efficiency_pct = navigation_efficiency(records);
  s.interaction_efficiency = interaction_efficiency(records);
  s.episode_count = static_cast<int>(records.size());
  return s;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.n = static_cast<int>(values.size());
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / values.size();
  out.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

MetricsSummary aggregate_seeds(const std::vector<SeedSummary>& seeds) {
  std::vector<double> sr, rw, nav, inter;
  MetricsSummary m;
  for (const auto& s : seeds) {
    sr.push_back(s.success_rate_pct);
    rw.push_back(s.avg_cumulative_reward);
    if (s.navigation_efficiency_pct) nav.push_back(*s.navigation_efficiency_pct);
    if (s.interaction_efficiency) inter.push_back(*s.interaction_efficiency);
    m.episode_count += s.episode_count;
  }
  m.success_rate_pct = mean_std(sr);
  m.avg_cumulative_reward = mean_std(rw);
  m.navigation_efficiency_pct = mean_std(nav);
  m.interaction_efficiency = mean_std(inter);
  m.seed_count = static_cast<int>(seeds.size());
  return m;
}

std::optional<double> relative_change(std::optional<double> value,
                                      std::optional<double> reference) {
  if (!value || !reference || *reference == 0.0) return std::nullopt;
  // Divide by the magnitude so a rise from a negative reference reads as positive.
  return (*value - *reference) / std::abs(*reference) * 100.0;
}

ComparisonReport compare_report(const MetricsSummary& enhanced,
                                const MetricsSummary& baseline) {
  ComparisonReport rep;
  auto row = [&](std::string name, const MeanStd& e, const MeanStd& b, bool lower) {
    rep.rows.push_back({std::move(name), e, b, relative_change(e.mean, b.mean), lower});
  };
  row("Success Rate (%)", enhanced.success_rate_pct, baseline.success_rate_pct, false);
  row("Avg. Cumulative Reward", enhanced.avg_cumulative_reward,
      baseline.avg_cumulative_reward, false);
  row("Navigation Efficiency (%)", enhanced.navigation_efficiency_pct,
      baseline.navigation_efficiency_pct, false);
  row("Interaction Efficiency", enhanced.interaction_efficiency,
      baseline.interaction_efficiency, true);
  return rep;
}

namespace {

std::string format_mean_std(const MeanStd& m) {
  if (!m.mean) return "n/a";
  char buf[64];
  if (m.std) {
    std::snprintf(buf, sizeof buf, "%.1f +/- %.1f", *m.mean, *m.std);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f", *m.mean);
  }
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

MeanStd mean_std_from_json(const nlohmann::json& j) {
  MeanStd m;
  m.mean = optional_from(j, "mean");
  m.std = optional_from(j, "std");
  m.n = j.value("n", 0);
  return m;
}

}  // namespace

std::string ComparisonReport::to_text() const {
  std::ostringstream os;
  const std::size_t w0 = 28, w1 = 22, w2 = 22;
  os << pad("Metric", w0) << pad("Perception-Enhanced", w1) << pad("Baseline", w2)
     << "Relative change\n";
  os << std::string(w0 + w1 + w2 + 16, '-') << "\n";
  for (const auto& r : rows) {
    std::string rel = "n/a";
    if (r.relative_change_pct) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%+.1f%%", *r.relative_change_pct);
      rel = buf;
      if (r.lower_is_better) rel += " (lower is better)";
    }
    os << pad(r.metric, w0) << pad(format_mean_std(r.enhanced), w1)
       << pad(format_mean_std(r.baseline), w2) << rel << "\n";
  }
  return os.str();
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"metric", r.metric},
                         {"enhanced", fetchrl::to_json(r.enhanced)},
                         {"baseline", fetchrl::to_json(r.baseline)},
                         {"relative_change_pct", optional_json(r.relative_change_pct)},
                         {"lower_is_better", r.lower_is_better}});
  }
  return {{"rows", rows_json}};
}

nlohmann::json to_json(const EpisodeRecord& r) {
  return {{"scene_id", r.spec.scene_id},
          {"target_class", r.spec.target_class},
          {"start_row", r.spec.start_pose.cell.row},
          {"start_col", r.spec.start_pose.cell.col},
          {"start_heading", std::string(to_string(r.spec.start_pose.heading))},
          {"max_steps", r.spec.max_steps},
          {"rng_seed", r.spec.rng_seed},
          {"success", r.success},
          {"cumulative_reward", r.cumulative_reward},
          {"move_count", r.move_count},
          {"optimal_path", r.optimal_path},
          {"pickup_attempts", r.pickup_attempts},
          {"steps", r.steps}};
}

EpisodeRecord record_from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.spec.scene_id = j.at("scene_id").get<int>();
  r.spec.target_class = j.at("target_class").get<int>();
  r.spec.start_pose.cell = {j.at("start_row").get<int>(), j.at("start_col").get<int>()};
  auto h = heading_from_string(j.at("start_heading").get<std::string>());
  if (!h) throw ConfigError("record: bad start_heading");
  r.spec.start_pose.heading = *h;
  r.spec.max_steps = j.at("max_steps").get<int>();
  r.spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  r.success = j.at("success").get<bool>();
  r.cumulative_reward = j.at("cumulative_reward").get<double>();
  r.move_count = j.at("move_count").get<int>();
  r.optimal_path = j.at("optimal_path").get<int>();
  r.pickup_attempts = j.at("pickup_attempts").get<int>();
  r.steps = j.at("steps").get<int>();
  return r;
}

std::string to_jsonl(const std::vector<EpisodeRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const SeedSummary& s) {
  return {{"success_rate_pct", s.success_rate_pct},
          {"avg_cumulative_reward", s.avg_cumulative_reward},
          {"navigation_efficiency_pct", optional_json(s.navigation_efficiency_pct)},
          {"interaction_efficiency", optional_json(s.interaction_efficiency)},
          {"episode_count", s.episode_count}};
}

SeedSummary seed_summary_from_json(const nlohmann::json& j) {
  SeedSummary s;
  s.success_rate_pct = j.at("success_rate_pct").get<double>();
  s.avg_cumulative_reward = j.at("avg_cumulative_reward").get<double>();
  s.navigation_efficiency_pct = optional_from(j, "navigation_efficiency_pct");
  s.interaction_efficiency = optional_from(j, "interaction_efficiency");
  s.episode_count = j.value("episode_count", 0);
  return s;
}

nlohmann::json to_json(const MeanStd& m) {
  return {{"mean", optional_json(m.mean)}, {"std", optional_json(m.std)}, {"n", m.n}};
}

nlohmann::json to_json(const MetricsSummary& m) {
  return {{"success_rate_pct", to_json(m.success_rate_pct)},
          {"avg_cumulative_reward", to_json(m.avg_cumulative_reward)},
          {"navigation_efficiency_pct", to_json(m.navigation_efficiency_pct)},
          {"interaction_efficiency", to_json(m.interaction_efficiency)},
          {"episode_count", m.episode_count},
          {"seed_count", m.seed_count}};
}

MetricsSummary metrics_summary_from_json(const nlohmann::json& j) {
  MetricsSummary m;
  m.success_rate_pct = mean_std_from_json(j.at("success_rate_pct"));
  m.avg_cumulative_reward = mean_std_from_json(j.at("avg_cumulative_reward"));
  m.navigation_efficiency_pct = mean_std_from_json(j.at("navigation_efficiency_pct"));
  m.interaction_efficiency = mean_std_from_json(j.at("interaction_efficiency"));
  m.episode_count = j.value("episode_count", 0);
  m.seed_count = j.value("seed_count", 0);
  return m;
}

}  // namespace fetchrl
