#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fetchrl/env.hpp"
#include "fetchrl/policy.hpp"

namespace fetchrl {

enum class PolicyMode { Stochastic, Greedy };

std::string_view to_string(PolicyMode m);
std::optional<PolicyMode> policy_mode_from_string(std::string_view s);

struct EvalConfig {
  std::vector<int> scenes = {1, 2, 3, 4};
  int episodes_per_scene = 100;
  std::uint64_t seed = 0;
  PolicyMode policy_mode = PolicyMode::Stochastic;
};

/// Plays a fixed, seed-determined episode set (per scene, in scene order)
/// without touching the parameters.
std::vector<EpisodeRecord> run_evaluation(const PolicyParams& params,
                                          const SceneLibrary& library,
                                          const EnvConfig& env, ObservationMode mode,
                                          const EvalConfig& eval);

/// Percentage of successful episodes. Throws ContractViolation on empty input.
double success_rate(const std::vector<EpisodeRecord>& records);
double average_cumulative_reward(const std::vector<EpisodeRecord>& records);
/// Mean over successful episodes of 100 * optimal / max(moves, 1); episodes
/// spawned adjacent to the target (optimal 0) count as 100. Absent without
/// successes.
std::optional<double> navigation_efficiency(const std::vector<EpisodeRecord>& records);
/// Mean pickup attempts over successful episodes, successful attempt included.
std::optional<double> interaction_efficiency(const std::vector<EpisodeRecord>& records);

/// Per-seed metric values.
struct SeedSummary {
  double success_rate_pct = 0.0;
  double avg_cumulative_reward = 0.0;
  std::optional<double> navigation_efficiency_pct;
  std::optional<double> interaction_efficiency;
  int episode_count = 0;
};

SeedSummary summarize(const std::vector<EpisodeRecord>& records);

struct MeanStd {
  std::optional<double> mean;
  std::optional<double> std;  // sample std (n - 1); absent for n < 2
  int n = 0;
};

struct MetricsSummary {
  MeanStd success_rate_pct;
  MeanStd avg_cumulative_reward;
  MeanStd navigation_efficiency_pct;
  MeanStd interaction_efficiency;
  int episode_count = 0;
  int seed_count = 0;
};

MeanStd mean_std(const std::vector<double>& values);

/// Mean and sample standard deviation of each metric across seeds. Metrics
/// absent for a seed are skipped for that seed.
MetricsSummary aggregate_seeds(const std::vector<SeedSummary>& seeds);

struct ComparisonRow {
  std::string metric;
  MeanStd enhanced;
  MeanStd baseline;
  // (enhanced - baseline) / baseline * 100; absent if either mean is absent
  // or the baseline mean is 0.
  std::optional<double> relative_change_pct;
  bool lower_is_better = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

std::optional<double> relative_change(std::optional<double> value,
                                      std::optional<double> reference);

ComparisonReport compare_report(const MetricsSummary& enhanced,
                                const MetricsSummary& baseline);

// Serialization. Records are one JSON object per line.
nlohmann::json to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const nlohmann::json& j);
std::string to_jsonl(const std::vector<EpisodeRecord>& records);
nlohmann::json to_json(const SeedSummary& s);
SeedSummary seed_summary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MeanStd& m);
nlohmann::json to_json(const MetricsSummary& m);
MetricsSummary metrics_summary_from_json(const nlohmann::json& j);

}  // namespace fetchrl
