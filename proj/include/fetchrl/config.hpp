#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fetchrl/env.hpp"
#include "fetchrl/eval.hpp"
#include "fetchrl/policy.hpp"
#include "fetchrl/ppo.hpp"

namespace fetchrl {

/// One canonical document per experiment. Baseline and enhanced runs differ
/// only in `mode`.
struct ExperimentConfig {
  ObservationMode mode = ObservationMode::Enhanced;
  std::string output_dir = "runs/experiment";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  SamplerConfig episode;
  PerceptionConfig perception;
  RewardWeights reward;
  NetworkSpec network;
  TrainConfig train;
  EvalConfig eval;

  // Throws ConfigError with the dotted path of the first bad field.
  void validate() const;
  TrainSetup train_setup(std::uint64_t seed) const;
  EnvConfig env_config() const { return {episode, perception, reward}; }
};

/// Strict: unknown keys and wrong types are errors naming the field path.
/// Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Parses JSON with `//` and `/* */` comments allowed.
nlohmann::json parse_config_text(std::string_view text);
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Applies `path=value` to the document. `path` is dotted
/// (`train.total_steps`) or a bare leaf name that occurs exactly once
/// (`total_steps`). `value` is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Hex FNV-1a 64 of the canonical (sorted, compact) dump.
std::string config_hash(const nlohmann::json& doc);

}  // namespace fetchrl
