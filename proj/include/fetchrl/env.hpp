#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fetchrl/perception.hpp"
#include "fetchrl/reward.hpp"
#include "fetchrl/scene.hpp"

namespace fetchrl {

enum class StartMode {
  Random,  // uniform free floor cell, uniform heading, level pitch
  Asset,   // the start pose declared in the scene header
};

struct SamplerConfig {
  std::vector<int> scenes = {1, 2, 3, 4};
  int max_steps = kDefaultMaxSteps;
  StartMode start = StartMode::Random;
  // Restricts targets to these classes when non-empty.
  std::vector<int> target_classes;
};

/// Draws episodes uniformly over the configured scenes and, within a scene,
/// uniformly over the classes that have a pickupable instance.
class EpisodeSampler {
 public:
  EpisodeSampler(const SceneLibrary& library, SamplerConfig config, std::uint64_t seed);

  EpisodeSpec next();
  EpisodeSpec next_for_scene(int scene_id);

 private:
  const SceneLibrary* library_;
  SamplerConfig config_;
  Rng rng_;
};

/// Classes with at least one pickupable instance, ascending.
std::vector<int> target_classes_in(const SceneAsset& asset);

struct EnvConfig {
  SamplerConfig sampler;
  PerceptionConfig perception;
  RewardWeights reward;
};

/// Episode-level record; the inputs of every evaluation metric.
struct EpisodeRecord {
  EpisodeSpec spec;
  bool success = false;
  double cumulative_reward = 0.0;
  int move_count = 0;       // successful MoveAhead actions
  int optimal_path = 0;     // BFS length from the start pose
  int pickup_attempts = 0;  // PickupObject actions, through the successful one
  int steps = 0;
};

struct Transition {
  RewardBreakdown reward;
  StepOutcome outcome;
  bool done = false;
  // Set on the step that ends an episode.
  std::optional<EpisodeRecord> finished;
};

/// One environment instance: world state, perception, reward, and episode
/// bookkeeping. Auto-resets from its sampler after an episode ends, or stops
/// if built for a single fixed episode.
class FetchEnv {
 public:
  FetchEnv(const SceneLibrary& library, EnvConfig config, ObservationMode mode,
           std::uint64_t seed);
  // Runs exactly one episode; step() after it ends throws.
  FetchEnv(const SceneLibrary& library, EnvConfig config, ObservationMode mode,
           const EpisodeSpec& episode);

  const Observation& observation() const { return obs_; }
  const WorldState& state() const { return state_; }
  ObservationMode mode() const { return mode_; }
  const EnvConfig& config() const { return config_; }

  Transition step(int action);

 private:
  void begin(const EpisodeSpec& spec);
  void refresh_observation();

  const SceneLibrary* library_;
  EnvConfig config_;
  ObservationMode mode_;
  std::optional<EpisodeSampler> sampler_;
  WorldState state_;
  Observation obs_;
  EpisodeRecord record_;
  int distance_ = 0;
  bool finished_ = false;
};

}  // namespace fetchrl
