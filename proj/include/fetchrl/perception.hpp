#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fetchrl/common.hpp"
#include "fetchrl/scene.hpp"

namespace fetchrl {

/// Knobs of the simulated detector/segmenter. The models are frozen, so the
/// only thing the learner ever sees is this noisy output interface.
struct PerceptionConfig {
  int window_radius = 5;
  double p_detect = 0.95;
  double p_misclass = 0.05;
  double p_mask_dropout = 0.05;
  // Poisson rate of spurious detections per frame.
  double p_false_positive = 0.05;

  int window() const { return 2 * window_radius + 1; }
  // Throws ConfigError naming the offending field.
  void validate() const;

  static PerceptionConfig noiseless() {
    return {5, 1.0, 0.0, 0.0, 0.0};
  }
};

enum class ObservationMode { Baseline, Enhanced };

std::string_view to_string(ObservationMode m);

/// Cell in the egocentric window: the agent sits at (r, r) and its heading
/// points toward row 0.
struct EgoCell {
  int row = 0;
  int col = 0;
  auto operator<=>(const EgoCell&) const = default;
};

struct EgoBox {
  int min_row = 0;
  int max_row = 0;
  int min_col = 0;
  int max_col = 0;

  bool contains(EgoCell c) const {
    return c.row >= min_row && c.row <= max_row && c.col >= min_col &&
           c.col <= max_col;
  }
  bool operator==(const EgoBox&) const = default;
};

struct Detection {
  EgoBox box;
  int class_label = 0;
  double confidence = 1.0;
  // Ground-truth instance for bookkeeping; negative for spurious detections.
  // Never reaches the feature tensor.
  int instance = -1;
};

struct SegmentMask {
  std::size_t detection_index = 0;
  std::vector<EgoCell> cells;
};

/// Channel-major stack of egocentric planes.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(int channels, int window)
      : channels_(channels),
        window_(window),
        data_(static_cast<std::size_t>(channels * window * window), 0.0) {}

  int channels() const { return channels_; }
  int window() const { return window_; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int r, int col) {
    return data_[(static_cast<std::size_t>(c) * window_ + r) * window_ + col];
  }
  double at(int c, int r, int col) const {
    return data_[(static_cast<std::size_t>(c) * window_ + r) * window_ + col];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const FeatureTensor&) const = default;

 private:
  int channels_ = 0;
  int window_ = 0;
  std::vector<double> data_;
};

/// Channel layout shared by both encoders.
namespace channel {
inline constexpr int kOccupancy = 0;
inline constexpr int kKnown = 1;
inline constexpr int kColor = 2;
inline constexpr int kClassBegin = 3;
inline constexpr int kInstance = kClassBegin + kNumClasses;
inline constexpr int kTarget = kInstance + 1;
inline constexpr int kPitch = kTarget + 1;
inline constexpr int kEnhancedCount = kPitch + 1;  // 6 + K
inline constexpr int kBaselineCount = 4;
}  // namespace channel

int channel_count(ObservationMode mode);

/// Maps a world cell to the agent's egocentric window, or nothing if it falls
/// outside.
std::optional<EgoCell> to_ego(const AgentPose& pose, Cell c, int radius);

std::vector<Detection> detect(const WorldState& state,
                              const PerceptionConfig& config, Rng& rng);

std::vector<SegmentMask> segment(const std::vector<Detection>& detections,
                                 const WorldState& state,
                                 const PerceptionConfig& config, Rng& rng);

FeatureTensor encode_enhanced(const std::vector<Detection>& detections,
                              const std::vector<SegmentMask>& masks,
                              int target_class, const WorldState& state,
                              const PerceptionConfig& config);

FeatureTensor encode_baseline(const WorldState& state,
                              const PerceptionConfig& config);

struct Observation {
  FeatureTensor features;
  // One-hot target class; given to both agents.
  std::vector<double> context;
};

/// Full per-step pipeline for either agent. The baseline path draws nothing
/// from `rng`.
Observation observe(const WorldState& state, const PerceptionConfig& config,
                    ObservationMode mode, Rng& rng);

std::vector<double> target_context(int target_class);

/// Human-readable channel map (index -> meaning).
std::string observation_schema(const PerceptionConfig& config,
                               ObservationMode mode);

}  // namespace fetchrl
