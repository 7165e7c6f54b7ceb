#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fetchrl/config.hpp"
#include "fetchrl/eval.hpp"

namespace fetchrl {

/// Environment variable that, when set, prefixes relative output directories.
inline constexpr const char* kOutputRootEnv = "FETCHRL_OUTPUT_ROOT";

std::filesystem::path resolve_output_dir(const std::string& output_dir);

/// Run directory layout:
///   manifest.json               version, config hash, config snapshot, seeds, wall times
///   config.json                 resolved config; `train --config` on it reproduces the run
///   summary_<mode>.json         seed aggregate per evaluation policy mode
///   seed_<s>/metrics.csv        one row per update
///   seed_<s>/eval.csv           periodic evaluation success rate
///   seed_<s>/checkpoint.bin
///   seed_<s>/records_<mode>.jsonl, seed_<s>/summary_<mode>.json
std::filesystem::path seed_dir(const std::filesystem::path& run_dir, std::uint64_t seed);

using ProgressFn = std::function<void(std::uint64_t seed, const UpdateStats&)>;

/// Trains every seed in turn, then evaluates each final checkpoint in both
/// policy modes. Returns the run directory.
std::filesystem::path run_experiment(const ExperimentConfig& cfg,
                                     const std::filesystem::path& run_dir,
                                     const ProgressFn& progress = {});

/// Fixed per-seed episode set, shared by every run with the same seed list so
/// that compared runs face identical episodes.
std::uint64_t eval_seed_for(std::uint64_t train_seed);

/// Evaluates one checkpoint on the configured scenes.
std::vector<EpisodeRecord> evaluate_checkpoint(const PolicyParams& params,
                                               const ExperimentConfig& cfg,
                                               std::uint64_t train_seed, PolicyMode mode);

struct RunEvaluation {
  std::vector<SeedSummary> seeds;
  MetricsSummary aggregate;
};

/// Re-evaluates every seed checkpoint of a run directory and rewrites its
/// records and summaries for `mode`. `episodes_per_scene` overrides the
/// configured count.
RunEvaluation evaluate_run(const std::filesystem::path& run_dir, PolicyMode mode,
                           std::optional<int> episodes_per_scene = std::nullopt);

/// Reads the experiment config snapshot of a run directory.
ExperimentConfig load_run_config(const std::filesystem::path& run_dir);

/// Per-seed summaries found in a run directory, ascending by seed.
std::vector<SeedSummary> load_seed_summaries(const std::filesystem::path& run_dir,
                                             PolicyMode mode);

struct RunComparison {
  ComparisonReport report;
  std::vector<std::string> warnings;
};

/// `enhanced_dir` fills the enhanced column, `baseline_dir` the baseline one.
RunComparison compare_runs(const std::filesystem::path& enhanced_dir,
                           const std::filesystem::path& baseline_dir, PolicyMode mode);

}  // namespace fetchrl
