#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fetchrl/perception.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fetchrl;
using namespace fetchrl::oracle;
using fetchrl::testing::library_with;
using fetchrl::testing::state_at;

namespace {

constexpr const char* kRoom = R"(# id: 7
# name: Room
# object: a Mug Mid 1 pickup
# object: k Knife Low 2 pickup
# object: p Phone High 4 pickup
# object: t Container Mid 5 fixed
#########
#.......#
#..a....#
#.......#
#.k...tt#
#.......#
#.p.....#
#########
)";

// Same room with the Mug swapped for an Apple of the same color.
constexpr const char* kRoomApple = R"(# id: 7
# name: Room
# object: a Apple Mid 1 pickup
# object: k Knife Low 2 pickup
# object: p Phone High 4 pickup
# object: t Container Mid 5 fixed
#########
#.......#
#..a....#
#.......#
#.k...tt#
#.......#
#.p.....#
#########
)";

std::optional<EgoCell> oracle_ego(const AgentPose& pose, Cell c, int radius) {
  auto [depth, lateral] = depth_lateral(pose, c);
  if (std::abs(depth) > radius || std::abs(lateral) > radius) return std::nullopt;
  return EgoCell{radius - depth, radius + lateral};
}

double pitch_value(Pitch p) {
  return p == Pitch::Down ? 0.0 : p == Pitch::Level ? 0.5 : 1.0;
}

HeightBand band_for(Pitch p) {
  return p == Pitch::Down ? HeightBand::Low : p == Pitch::Level ? HeightBand::Mid : HeightBand::High;
}

// Noiseless enhanced tensor computed from the world directly.
FeatureTensor oracle_enhanced(const WorldState& s, int radius) {
  const int w = 2 * radius + 1;
  FeatureTensor t(6 + kNumClasses, w);
  const std::set<Cell> vis = oracle_visible(s.map(), s.agent);
  std::set<Cell> covered;
  for (const auto& o : s.objects) {
    if (!o.held) covered.insert(o.footprint.begin(), o.footprint.end());
  }
  t.at(1, radius, radius) = 1.0;
  for (Cell c : vis) {
    auto e = oracle_ego(s.agent, c, radius);
    if (!e) continue;
    t.at(1, e->row, e->col) = 1.0;
    if (!s.map().is_floor(c) || covered.count(c)) t.at(0, e->row, e->col) = 1.0;
  }
  for (const auto& o : s.objects) {
    if (o.held || o.band != band_for(s.agent.pitch) || !vis.count(o.cell())) continue;
    std::vector<EgoCell> seen;
    for (Cell c : o.footprint) {
      if (!vis.count(c)) continue;
      if (auto e = oracle_ego(s.agent, c, radius)) {
        t.at(2, e->row, e->col) = o.color_id / 5.0;
        seen.push_back(*e);
      }
    }
    if (seen.empty()) continue;
    int r0 = w, r1 = -1, c0 = w, c1 = -1;
    for (EgoCell e : seen) {
      r0 = std::min(r0, e.row);
      r1 = std::max(r1, e.row);
      c0 = std::min(c0, e.col);
      c1 = std::max(c1, e.col);
    }
    for (Cell c : o.footprint) {
      auto e = oracle_ego(s.agent, c, radius);
      if (!e || e->row < r0 || e->row > r1 || e->col < c0 || e->col > c1) continue;
      t.at(3 + o.class_id, e->row, e->col) = 1.0;
      t.at(3 + kNumClasses, e->row, e->col) = 1.0;
      if (o.class_id == s.target_class) t.at(4 + kNumClasses, e->row, e->col) = 1.0;
    }
  }
  for (int r = 0; r < w; ++r) {
    for (int c = 0; c < w; ++c) t.at(5 + kNumClasses, r, c) = pitch_value(s.agent.pitch);
  }
  return t;
}

FeatureTensor noiseless_enhanced(const WorldState& s, PerceptionConfig cfg) {
  Rng rng(3);
  auto dets = detect(s, cfg, rng);
  auto masks = segment(dets, s, cfg, rng);
  return encode_enhanced(dets, masks, s.target_class, s, cfg);
}

std::vector<WorldState> random_states(int count, std::uint64_t seed) {
  const SceneLibrary lib = SceneLibrary::shipped();
  std::mt19937_64 rng(seed);
  std::vector<WorldState> out;
  while (static_cast<int>(out.size()) < count) {
    const int id = 1 + static_cast<int>(rng() % 4);
    const SceneAsset& a = lib.get(id);
    const SceneObject& target = a.objects[rng() % a.objects.size()];
    if (!target.pickupable) continue;
    const Cell c{int(rng() % a.map.height()), int(rng() % a.map.width())};
    if (!a.map.is_floor(c)) continue;
    bool covered = false;
    for (const auto& o : a.objects) {
      covered = covered || std::count(o.footprint.begin(), o.footprint.end(), c) > 0;
    }
    if (covered) continue;
    out.push_back(state_at(lib, id, target.class_id, c, static_cast<Heading>(rng() % 4),
                           static_cast<Pitch>(rng() % 3)));
  }
  return out;
}

}  // namespace

TEST(Perception, EgoMappingMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const AgentPose pose{{int(rng() % 15), int(rng() % 15)}, static_cast<Heading>(rng() % 4),
                         Pitch::Level, std::nullopt};
    const Cell c{int(rng() % 15), int(rng() % 15)};
    const int radius = 1 + static_cast<int>(rng() % 6);
    EXPECT_EQ(to_ego(pose, c, radius), oracle_ego(pose, c, radius));
  }
  const AgentPose east{{5, 5}, Heading::E, Pitch::Level, std::nullopt};
  EXPECT_EQ(to_ego(east, {5, 6}, 5), (EgoCell{4, 5}));  // ahead is up
  EXPECT_EQ(to_ego(east, {6, 5}, 5), (EgoCell{5, 6}));  // south is right when facing east
  EXPECT_EQ(to_ego(east, {5, 5}, 5), (EgoCell{5, 5}));
}

TEST(Perception, HandCheckedPlanes) {
  const SceneLibrary lib = library_with(kRoom);
  const WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  const FeatureTensor t = noiseless_enhanced(s, PerceptionConfig::noiseless());
  ASSERT_EQ(t.channels(), 14);
  ASSERT_EQ(t.window(), 11);
  // Mug one cell ahead.
  EXPECT_EQ(t.at(channel::kOccupancy, 4, 5), 1.0);
  EXPECT_DOUBLE_EQ(t.at(channel::kColor, 4, 5), 0.2);
  EXPECT_EQ(t.at(channel::kClassBegin + 0, 4, 5), 1.0);
  EXPECT_EQ(t.at(channel::kInstance, 4, 5), 1.0);
  EXPECT_EQ(t.at(channel::kTarget, 4, 5), 1.0);
  // Top wall at depth 3 spans lateral -3..3.
  for (int col = 2; col <= 8; ++col) {
    EXPECT_EQ(t.at(channel::kKnown, 2, col), 1.0) << col;
    EXPECT_EQ(t.at(channel::kOccupancy, 2, col), 1.0) << col;
  }
  EXPECT_EQ(t.at(channel::kKnown, 1, 5), 0.0);  // beyond the wall
  EXPECT_EQ(t.at(channel::kKnown, 6, 5), 0.0);  // behind
  EXPECT_EQ(t.at(channel::kKnown, 5, 5), 1.0);  // own cell
  for (double v : std::vector<double>(t.data().end() - 121, t.data().end())) EXPECT_EQ(v, 0.5);
  int class_cells = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    for (int r = 0; r < 11; ++r) {
      for (int c = 0; c < 11; ++c) class_cells += t.at(channel::kClassBegin + k, r, c) > 0;
    }
  }
  EXPECT_EQ(class_cells, 1);
}

TEST(Perception, NoiselessMatchesOracleOnRandomPoses) {
  for (int radius : {5, 3}) {
    PerceptionConfig cfg = PerceptionConfig::noiseless();
    cfg.window_radius = radius;
    int with_objects = 0;
    for (const WorldState& s : random_states(300, 17 + radius)) {
      const FeatureTensor got = noiseless_enhanced(s, cfg);
      const FeatureTensor want = oracle_enhanced(s, radius);
      ASSERT_EQ(got.channels(), want.channels());
      for (std::size_t i = 0; i < want.size(); ++i) {
        ASSERT_DOUBLE_EQ(got.data()[i], want.data()[i])
            << "scene " << s.map().id() << " at " << s.agent.cell.row << "," << s.agent.cell.col
            << " flat index " << i;
      }
      Rng rng(1);
      with_objects += !detect(s, cfg, rng).empty();
    }
    EXPECT_GT(with_objects, 40);
  }
}

TEST(Perception, BaselineSharesGeometryPlanes) {
  for (const WorldState& s : random_states(100, 5)) {
    const PerceptionConfig cfg = PerceptionConfig::noiseless();
    const FeatureTensor enh = noiseless_enhanced(s, cfg);
    const FeatureTensor base = encode_baseline(s, cfg);
    ASSERT_EQ(base.channels(), 4);
    const int src[] = {channel::kOccupancy, channel::kKnown, channel::kColor, channel::kPitch};
    for (int c = 0; c < 4; ++c) {
      for (int r = 0; r < 11; ++r) {
        for (int col = 0; col < 11; ++col) {
          ASSERT_EQ(base.at(c, r, col), enh.at(src[c], r, col));
        }
      }
    }
  }
}

TEST(Perception, BaselineCannotTellAliasedClassesApart) {
  const SceneLibrary mug = library_with(kRoom);
  const SceneLibrary apple = library_with(kRoomApple);
  const WorldState a = state_at(mug, 7, 2, {3, 3}, Heading::N);
  const WorldState b = state_at(apple, 7, 2, {3, 3}, Heading::N);
  const PerceptionConfig cfg = PerceptionConfig::noiseless();
  EXPECT_EQ(encode_baseline(a, cfg), encode_baseline(b, cfg));
  EXPECT_NE(noiseless_enhanced(a, cfg), noiseless_enhanced(b, cfg));
}

TEST(Perception, BaselineDrawsNoRandomness) {
  const SceneLibrary lib = library_with(kRoom);
  const WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  Rng rng(99);
  const Rng before = rng;
  const Observation obs = observe(s, PerceptionConfig{}, ObservationMode::Baseline, rng);
  EXPECT_EQ(rng, before);
  EXPECT_EQ(obs.features.channels(), 4);
  EXPECT_EQ(obs.context, target_context(0));
}

TEST(Perception, ContextIsOneHot) {
  for (int k = 0; k < kNumClasses; ++k) {
    const auto ctx = target_context(k);
    ASSERT_EQ(ctx.size(), 8u);
    for (int j = 0; j < kNumClasses; ++j) EXPECT_EQ(ctx[j], j == k ? 1.0 : 0.0);
  }
  EXPECT_THROW(target_context(8), std::out_of_range);
}

TEST(Perception, ObserveIsDeterministicGivenRng) {
  for (const WorldState& s : random_states(30, 8)) {
    Rng r1(5), r2(5);
    const Observation a = observe(s, PerceptionConfig{}, ObservationMode::Enhanced, r1);
    const Observation b = observe(s, PerceptionConfig{}, ObservationMode::Enhanced, r2);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(r1, r2);
  }
}

TEST(Perception, DetectionRateMatchesConfig) {
  const SceneLibrary lib = library_with(kRoom);
  const WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);  // only the Mug is visible
  PerceptionConfig cfg = PerceptionConfig::noiseless();
  cfg.p_detect = 0.7;
  Rng rng(2024);
  const int n = 20000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += static_cast<int>(detect(s, cfg, rng).size());
  const double sigma = std::sqrt(0.7 * 0.3 / n);
  EXPECT_NEAR(double(hits) / n, 0.7, 5 * sigma);
}

TEST(Perception, MisclassificationIsUniformOverOtherClasses) {
  const SceneLibrary lib = library_with(kRoom);
  const WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  PerceptionConfig cfg = PerceptionConfig::noiseless();
  cfg.p_misclass = 0.35;
  Rng rng(7);
  const int n = 28000;
  std::map<int, int> labels;
  for (int i = 0; i < n; ++i) {
    const auto dets = detect(s, cfg, rng);
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_EQ(dets[0].instance, 0);
    labels[dets[0].class_label]++;
  }
  EXPECT_NEAR(double(labels[0]) / n, 0.65, 5 * std::sqrt(0.65 * 0.35 / n));
  const double p_each = 0.35 / 7;
  for (int k = 1; k < kNumClasses; ++k) {
    EXPECT_NEAR(double(labels[k]) / n, p_each, 5 * std::sqrt(p_each * (1 - p_each) / n)) << k;
  }
}

TEST(Perception, FalsePositivesArePoisson) {
  const SceneLibrary lib = library_with(kRoom);
  const WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  PerceptionConfig cfg = PerceptionConfig::noiseless();
  cfg.p_detect = 0.0;
  cfg.p_false_positive = 0.5;
  const std::set<Cell> vis = oracle_visible(s.map(), s.agent);
  std::set<EgoCell> allowed;
  for (Cell c : vis) allowed.insert(*oracle_ego(s.agent, c, 5));
  Rng rng(31);
  const int n = 20000;
  int total = 0, zero = 0;
  for (int i = 0; i < n; ++i) {
    const auto dets = detect(s, cfg, rng);
    total += static_cast<int>(dets.size());
    zero += dets.empty();
    for (const auto& d : dets) {
      ASSERT_LT(d.instance, 0);
      ASSERT_EQ(d.box.min_row, d.box.max_row);
      ASSERT_EQ(d.box.min_col, d.box.max_col);
      ASSERT_TRUE(allowed.count({d.box.min_row, d.box.min_col}));
      ASSERT_GT(d.confidence, 0.0);
      ASSERT_LE(d.confidence, 0.5);
    }
  }
  EXPECT_NEAR(double(total) / n, 0.5, 5 * std::sqrt(0.5 / n));
  const double p0 = std::exp(-0.5);
  EXPECT_NEAR(double(zero) / n, p0, 5 * std::sqrt(p0 * (1 - p0) / n));
}

TEST(Perception, MaskDropoutRate) {
  const SceneLibrary lib = library_with(kRoom);
  // From (1,6) facing S both Container cells are visible at Level.
  const WorldState s = state_at(lib, 7, 0, {1, 6}, Heading::S);
  PerceptionConfig cfg = PerceptionConfig::noiseless();
  cfg.p_mask_dropout = 0.25;
  Rng rng(12);
  const int n = 10000;
  int kept = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    const auto dets = detect(s, cfg, rng);
    const auto masks = segment(dets, s, cfg, rng);
    ASSERT_EQ(masks.size(), dets.size());
    for (std::size_t j = 0; j < dets.size(); ++j) {
      ASSERT_EQ(masks[j].detection_index, j);
      if (dets[j].instance != 3) continue;
      total += 2;
      kept += static_cast<int>(masks[j].cells.size());
      for (EgoCell c : masks[j].cells) ASSERT_TRUE(dets[j].box.contains(c));
    }
  }
  ASSERT_EQ(total, 2 * n);
  EXPECT_NEAR(double(kept) / total, 0.75, 5 * std::sqrt(0.75 * 0.25 / total));
}

TEST(Perception, DetectionsSortedByConfidence) {
  PerceptionConfig cfg;
  cfg.p_false_positive = 1.0;
  Rng rng(4);
  for (const WorldState& s : random_states(200, 9)) {
    const auto dets = detect(s, cfg, rng);
    for (std::size_t i = 1; i < dets.size(); ++i) {
      ASSERT_GE(dets[i - 1].confidence, dets[i].confidence);
    }
    for (const auto& d : dets) {
      if (d.instance >= 0) {
        ASSERT_GE(d.confidence, 0.5);
        ASSERT_LE(d.confidence, 1.0);
      }
    }
  }
}

TEST(Perception, EncoderRejectsInconsistentInput) {
  const SceneLibrary lib = library_with(kRoom);
  const WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  const PerceptionConfig cfg = PerceptionConfig::noiseless();
  Detection d{{4, 4, 5, 5}, 0, 0.9, 0};
  EXPECT_THROW(encode_enhanced({d}, {}, 0, s, cfg), ShapeMismatch);
  EXPECT_THROW(encode_enhanced({d}, {{0, {{11, 5}}}}, 0, s, cfg), ShapeMismatch);
  EXPECT_THROW(encode_enhanced({d}, {{1, {{4, 5}}}}, 0, s, cfg), ShapeMismatch);
  EXPECT_THROW(encode_enhanced({d}, {{0, {{4, 5}}}}, 8, s, cfg), ShapeMismatch);
  d.class_label = 9;
  EXPECT_THROW(encode_enhanced({d}, {{0, {{4, 5}}}}, 0, s, cfg), ShapeMismatch);
}

TEST(Perception, ConfigValidation) {
  PerceptionConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.p_detect = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.window_radius = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.p_mask_dropout = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Perception, SchemaListsEveryChannel) {
  const std::string enh = observation_schema(PerceptionConfig{}, ObservationMode::Enhanced);
  EXPECT_NE(enh.find("shape: 14 x 11 x 11"), std::string::npos);
  EXPECT_NE(enh.find("13: pitch"), std::string::npos);
  EXPECT_NE(enh.find("class Container"), std::string::npos);
  const std::string base = observation_schema(PerceptionConfig{}, ObservationMode::Baseline);
  EXPECT_NE(base.find("shape: 4 x 11 x 11"), std::string::npos);
  EXPECT_EQ(base.find("class Mug"), std::string::npos);
  EXPECT_EQ(channel_count(ObservationMode::Enhanced), 6 + kNumClasses);
}
