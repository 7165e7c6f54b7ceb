#include "fetchrl/env.hpp"

#include <algorithm>

namespace fetchrl {

std::vector<int> target_classes_in(const SceneAsset& asset) {
  std::vector<int> out;
  for (const auto& o : asset.objects) {
    if (o.pickupable) out.push_back(o.class_id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EpisodeSampler::EpisodeSampler(const SceneLibrary& library, SamplerConfig config,
                               std::uint64_t seed)
    : library_(&library), config_(std::move(config)), rng_(derive_seed(seed, 0x5a3)) {
  if (config_.scenes.empty()) throw ConfigError("sampler.scenes must not be empty");
  for (int id : config_.scenes) {
    if (!library_->contains(id)) {
      throw ConfigError("sampler.scenes: unknown scene " + std::to_string(id));
    }
  }
  if (config_.max_steps < 1) throw ConfigError("sampler.max_steps must be >= 1");
}

EpisodeSpec EpisodeSampler::next() {
  const int scene = config_.scenes[uniform_index(rng_, config_.scenes.size())];
  return next_for_scene(scene);
}

EpisodeSpec EpisodeSampler::next_for_scene(int scene_id) {
  const SceneAsset& asset = library_->get(scene_id);
  std::vector<int> classes = target_classes_in(asset);
  if (!config_.target_classes.empty()) {
    std::erase_if(classes, [&](int c) {
      return std::find(config_.target_classes.begin(), config_.target_classes.end(), c) ==
             config_.target_classes.end();
    });
  }
  if (classes.empty()) {
    throw ConfigError("scene " + std::to_string(scene_id) + " has no eligible target class");
  }
  EpisodeSpec spec;
  spec.scene_id = scene_id;
  spec.target_class = classes[uniform_index(rng_, classes.size())];
  spec.max_steps = config_.max_steps;

  if (config_.start == StartMode::Asset) {
    if (!asset.start) {
      throw ConfigError("scene " + std::to_string(scene_id) + " declares no start pose");
    }
    spec.start_pose = *asset.start;
  } else {
    std::vector<Cell> free;
    const GridMap& map = asset.map;
    for (int r = 0; r < map.height(); ++r) {
      for (int c = 0; c < map.width(); ++c) {
        const Cell cell{r, c};
        if (!map.is_floor(cell)) continue;
        const bool covered = std::any_of(asset.objects.begin(), asset.objects.end(),
                                         [&](const SceneObject& o) {
                                           return std::find(o.footprint.begin(),
                                                            o.footprint.end(),
                                                            cell) != o.footprint.end();
                                         });
        if (!covered) free.push_back(cell);
      }
    }
    spec.start_pose.cell = free[uniform_index(rng_, free.size())];
    spec.start_pose.heading = static_cast<Heading>(uniform_index(rng_, 4));
    spec.start_pose.pitch = Pitch::Level;
  }
  spec.rng_seed = rng_();
  return spec;
}

FetchEnv::FetchEnv(const SceneLibrary& library, EnvConfig config, ObservationMode mode,
                   std::uint64_t seed)
    : library_(&library), config_(std::move(config)), mode_(mode) {
  config_.perception.validate();
  config_.reward.validate();
  sampler_.emplace(library, config_.sampler, seed);
  begin(sampler_->next());
}

FetchEnv::FetchEnv(const SceneLibrary& library, EnvConfig config, ObservationMode mode,
                   const EpisodeSpec& episode)
    : library_(&library), config_(std::move(config)), mode_(mode) {
  config_.perception.validate();
  config_.reward.validate();
  begin(episode);
}

void FetchEnv::begin(const EpisodeSpec& spec) {
  state_ = reset(*library_, spec);
  record_ = EpisodeRecord{};
  record_.spec = spec;
  distance_ = distance_to_target(state_);
  record_.optimal_path = distance_;
  finished_ = false;
  refresh_observation();
}

void FetchEnv::refresh_observation() {
  obs_ = observe(state_, config_.perception, mode_, state_.rng);
}

Transition FetchEnv::step(int action) {
  if (action < 0 || action >= kActionCount) {
    throw ContractViolation("action index " + std::to_string(action) + " out of range");
  }
  if (finished_) throw ContractViolation("step after the episode finished");
  Transition tr;
  const Action a = static_cast<Action>(action);
  const Cell before = state_.agent.cell;
  tr.outcome = fetchrl::step(state_, a);
  // A success ends the episode, so the distance is frozen for the final delta.
  const int new_d = tr.outcome.success ? distance_ : distance_to_target(state_);
  tr.reward = compute_reward(distance_, new_d, tr.outcome, config_.reward);
  distance_ = new_d;

  record_.cumulative_reward += tr.reward.total;
  if (a == Action::MoveAhead && state_.agent.cell != before) ++record_.move_count;
  if (tr.outcome.pickup_attempted) ++record_.pickup_attempts;
  record_.steps = tr.outcome.steps_elapsed;

  tr.done = tr.outcome.terminal;
  if (tr.done) {
    record_.success = tr.outcome.success;
    tr.finished = record_;
    if (sampler_) {
      begin(sampler_->next());
    } else {
      finished_ = true;
    }
  } else {
    refresh_observation();
  }
  return tr;
}

}  // namespace fetchrl
