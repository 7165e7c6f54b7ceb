#include "fetchrl/perception.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fetchrl {

namespace {

void check_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string("perception.") + field + " must be in [0, 1]");
  }
}

// Knuth's multiplicative method; rates here are well below 1.
int sample_poisson(double rate, Rng& rng) {
  if (rate <= 0.0) return 0;
  const double limit = std::exp(-rate);
  int k = 0;
  double prod = uniform01(rng);
  while (prod > limit) {
    ++k;
    prod *= uniform01(rng);
  }
  return k;
}

double pitch_level(Pitch p) {
  switch (p) {
    case Pitch::Down:
      return 0.0;
    case Pitch::Level:
      return 0.5;
    case Pitch::Up:
      return 1.0;
  }
  return 0.5;
}

// Occupancy, known, color and pitch planes; identical in both encoders.
void paint_shared(FeatureTensor& t, int ch_occ, int ch_known, int ch_color,
                  int ch_pitch, const WorldState& state, int radius) {
  const GridMap& map = state.map();
  const AgentPose& pose = state.agent;
  t.at(ch_known, radius, radius) = 1.0;
  for (Cell c : visible_cells(state)) {
    auto e = to_ego(pose, c, radius);
    if (!e) continue;
    t.at(ch_known, e->row, e->col) = 1.0;
    if (!map.is_floor(c) || state.object_at(c)) {
      t.at(ch_occ, e->row, e->col) = 1.0;
    }
  }
  for (const VisibleObject& v : visible_objects(state)) {
    const double color =
        static_cast<double>(state.objects[v.object_index].color_id) / kNumColors;
    for (Cell c : v.footprint) {
      if (auto e = to_ego(pose, c, radius)) t.at(ch_color, e->row, e->col) = color;
    }
  }
  const double pitch = pitch_level(pose.pitch);
  for (int r = 0; r < t.window(); ++r) {
    for (int col = 0; col < t.window(); ++col) t.at(ch_pitch, r, col) = pitch;
  }
}

}  // namespace

void PerceptionConfig::validate() const {
  if (window_radius < 1) throw ConfigError("perception.window_radius must be >= 1");
  check_probability(p_detect, "p_detect");
  check_probability(p_misclass, "p_misclass");
  check_probability(p_mask_dropout, "p_mask_dropout");
  check_probability(p_false_positive, "p_false_positive");
}

std::string_view to_string(ObservationMode m) {
  return m == ObservationMode::Baseline ? "baseline" : "enhanced";
}

int channel_count(ObservationMode mode) {
  return mode == ObservationMode::Baseline ? channel::kBaselineCount
                                           : channel::kEnhancedCount;
}

std::optional<EgoCell> to_ego(const AgentPose& pose, Cell c, int radius) {
  const Cell fwd = heading_delta(pose.heading);
  const Cell right{fwd.col, -fwd.row};
  const int dr = c.row - pose.cell.row;
  const int dc = c.col - pose.cell.col;
  const int depth = dr * fwd.row + dc * fwd.col;
  const int lateral = dr * right.row + dc * right.col;
  if (std::abs(depth) > radius || std::abs(lateral) > radius) return std::nullopt;
  return EgoCell{radius - depth, radius + lateral};
}

std::vector<Detection> detect(const WorldState& state,
                              const PerceptionConfig& config, Rng& rng) {
  const int radius = config.window_radius;
  std::vector<Detection> out;
  for (const VisibleObject& v : visible_objects(state)) {
    const SceneObject& obj = state.objects[v.object_index];
    const bool included = uniform01(rng) < config.p_detect;
    if (!included) continue;
    int label = obj.class_id;
    if (uniform01(rng) < config.p_misclass) {
      label = static_cast<int>(uniform_index(rng, kNumClasses - 1));
      if (label >= obj.class_id) ++label;
    }
    const double confidence = 1.0 - 0.5 * uniform01(rng);

    std::optional<EgoBox> box;
    for (Cell c : v.footprint) {
      auto e = to_ego(state.agent, c, radius);
      if (!e) continue;
      if (!box) {
        box = EgoBox{e->row, e->row, e->col, e->col};
      } else {
        box->min_row = std::min(box->min_row, e->row);
        box->max_row = std::max(box->max_row, e->row);
        box->min_col = std::min(box->min_col, e->col);
        box->max_col = std::max(box->max_col, e->col);
      }
    }
    if (!box) continue;
    out.push_back({*box, label, confidence, obj.instance_id});
  }

  const int spurious = sample_poisson(config.p_false_positive, rng);
  if (spurious > 0) {
    std::vector<EgoCell> candidates;
    for (Cell c : visible_cells(state)) {
      if (auto e = to_ego(state.agent, c, radius)) candidates.push_back(*e);
    }
    for (int k = 0; k < spurious && !candidates.empty(); ++k) {
      const EgoCell e = candidates[uniform_index(rng, candidates.size())];
      const int label = static_cast<int>(uniform_index(rng, kNumClasses));
      const double confidence = 0.5 * (1.0 - uniform01(rng));
      out.push_back({{e.row, e.row, e.col, e.col}, label, confidence, -1 - k});
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.instance < b.instance;
  });
  return out;
}

std::vector<SegmentMask> segment(const std::vector<Detection>& detections,
                                 const WorldState& state,
                                 const PerceptionConfig& config, Rng& rng) {
  std::vector<SegmentMask> out;
  out.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    SegmentMask mask{i, {}};
    if (d.instance < 0) {
      mask.cells.push_back({d.box.min_row, d.box.min_col});
    } else {
      const SceneObject* obj = nullptr;
      for (const auto& o : state.objects) {
        if (o.instance_id == d.instance) obj = &o;
      }
      if (obj == nullptr) throw ContractViolation("detection of unknown instance");
      for (Cell c : obj->footprint) {
        auto e = to_ego(state.agent, c, config.window_radius);
        if (!e || !d.box.contains(*e)) continue;
        if (uniform01(rng) < config.p_mask_dropout) continue;
        mask.cells.push_back(*e);
      }
    }
    out.push_back(std::move(mask));
  }
  return out;
}

FeatureTensor encode_enhanced(const std::vector<Detection>& detections,
                              const std::vector<SegmentMask>& masks,
                              int target_class, const WorldState& state,
                              const PerceptionConfig& config) {
  const int w = config.window();
  if (masks.size() != detections.size()) {
    throw ShapeMismatch("encode_enhanced: " + std::to_string(masks.size()) +
                        " masks for " + std::to_string(detections.size()) +
                        " detections");
  }
  if (target_class < 0 || target_class >= kNumClasses) {
    throw ShapeMismatch("encode_enhanced: target class out of range");
  }
  FeatureTensor t(channel::kEnhancedCount, w);
  paint_shared(t, channel::kOccupancy, channel::kKnown, channel::kColor,
               channel::kPitch, state, config.window_radius);

  for (const SegmentMask& m : masks) {
    if (m.detection_index >= detections.size()) {
      throw ShapeMismatch("encode_enhanced: mask references missing detection");
    }
    const Detection& d = detections[m.detection_index];
    if (d.class_label < 0 || d.class_label >= kNumClasses) {
      throw ShapeMismatch("encode_enhanced: class label out of range");
    }
    for (EgoCell c : m.cells) {
      if (c.row < 0 || c.col < 0 || c.row >= w || c.col >= w) {
        throw ShapeMismatch("encode_enhanced: mask cell outside the window");
      }
      t.at(channel::kClassBegin + d.class_label, c.row, c.col) = 1.0;
      t.at(channel::kInstance, c.row, c.col) = 1.0;
      if (d.class_label == target_class) t.at(channel::kTarget, c.row, c.col) = 1.0;
    }
  }
  return t;
}

FeatureTensor encode_baseline(const WorldState& state,
                              const PerceptionConfig& config) {
  FeatureTensor t(channel::kBaselineCount, config.window());
  paint_shared(t, 0, 1, 2, 3, state, config.window_radius);
  return t;
}

std::vector<double> target_context(int target_class) {
  std::vector<double> ctx(kNumClasses, 0.0);
  ctx.at(static_cast<std::size_t>(target_class)) = 1.0;
  return ctx;
}

Observation observe(const WorldState& state, const PerceptionConfig& config,
                    ObservationMode mode, Rng& rng) {
  Observation obs;
  obs.context = target_context(state.target_class);
  if (mode == ObservationMode::Baseline) {
    obs.features = encode_baseline(state, config);
  } else {
    auto dets = detect(state, config, rng);
    auto masks = segment(dets, state, config, rng);
    obs.features = encode_enhanced(dets, masks, state.target_class, state, config);
  }
  return obs;
}

std::string observation_schema(const PerceptionConfig& config,
                               ObservationMode mode) {
  std::ostringstream os;
  const int w = config.window();
  os << "mode: " << to_string(mode) << "\n";
  os << "shape: " << channel_count(mode) << " x " << w << " x " << w << "\n";
  os << "context: one-hot target class, width " << kNumClasses << "\n";
  if (mode == ObservationMode::Baseline) {
    os << "0: occupancy (obstacle or object, seen cells)\n";
    os << "1: known (1 = in view, 0 = unknown)\n";
    os << "2: appearance (color_id / " << kNumColors << ")\n";
    os << "3: pitch (Down 0, Level 0.5, Up 1)\n";
    return os.str();
  }
  os << channel::kOccupancy << ": occupancy (obstacle or object, seen cells)\n";
  os << channel::kKnown << ": known (1 = in view, 0 = unknown)\n";
  os << channel::kColor << ": appearance (color_id / " << kNumColors << ")\n";
  for (int k = 0; k < kNumClasses; ++k) {
    os << channel::kClassBegin + k << ": class " << kClassNames[k] << " (mask cells)\n";
  }
  os << channel::kInstance << ": instance (union of masks)\n";
  os << channel::kTarget << ": target match (mask cells labelled as target)\n";
  os << channel::kPitch << ": pitch (Down 0, Level 0.5, Up 1)\n";
  return os.str();
}

}  // namespace fetchrl
