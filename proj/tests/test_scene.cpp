#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>

#include "fetchrl/scene.hpp"
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

GridMap random_map(std::mt19937_64& rng, int size, double p_wall) {
  std::bernoulli_distribution wall(p_wall);
  std::vector<CellKind> cells(size * size, CellKind::Obstacle);
  for (int r = 1; r < size - 1; ++r) {
    for (int c = 1; c < size - 1; ++c) {
      cells[r * size + c] = wall(rng) ? CellKind::Obstacle : CellKind::Floor;
    }
  }
  return GridMap(99, "random", size, size, std::move(cells));
}

WorldState bare_state(const GridMap& map, const AgentPose& pose) {
  auto asset = std::make_shared<SceneAsset>();
  asset->map = map;
  WorldState s;
  s.asset = asset;
  s.agent = pose;
  return s;
}

Pitch expected_pitch(HeightBand b) {
  switch (b) {
    case HeightBand::Low: return Pitch::Down;
    case HeightBand::Mid: return Pitch::Level;
    case HeightBand::High: return Pitch::Up;
  }
  return Pitch::Level;
}

void expect_parse_error(const std::string& text, const std::string& fragment) {
  try {
    load_scene(text);
    FAIL() << "expected a parse error containing '" << fragment << "'";
  } catch (const SceneParseError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(SceneParse, HandWrittenRoom) {
  const SceneAsset a = load_scene(kRoom);
  EXPECT_EQ(a.map.id(), 7);
  EXPECT_EQ(a.map.name(), "Room");
  EXPECT_EQ(a.map.width(), 9);
  EXPECT_EQ(a.map.height(), 8);
  ASSERT_EQ(a.objects.size(), 4u);
  EXPECT_EQ(a.objects[0].class_id, 0);
  EXPECT_EQ(a.objects[0].cell(), (Cell{2, 3}));
  EXPECT_EQ(a.objects[1].band, HeightBand::Low);
  EXPECT_EQ(a.objects[2].color_id, 4);
  EXPECT_FALSE(a.objects[3].pickupable);
  EXPECT_EQ(a.objects[3].footprint, (std::vector<Cell>{{4, 6}, {4, 7}}));
  for (std::size_t i = 0; i < a.objects.size(); ++i) EXPECT_EQ(a.objects[i].instance_id, int(i));
  EXPECT_FALSE(a.start.has_value());
  EXPECT_EQ(a.map.at({0, 0}), CellKind::Obstacle);
  EXPECT_EQ(a.map.at({2, 3}), CellKind::Floor);
}

TEST(SceneParse, FloorPlan1Inventory) {
  const SceneAsset a = SceneLibrary::shipped().get(1);
  struct Row {
    int cls;
    HeightBand band;
    int color;
    Cell cell;
  };
  const std::vector<Row> golden = {
      {0, HeightBand::Mid, 1, {1, 3}}, {1, HeightBand::Mid, 1, {1, 7}},
      {2, HeightBand::Low, 2, {5, 1}}, {5, HeightBand::Low, 2, {5, 7}},
      {3, HeightBand::Mid, 3, {6, 4}}, {6, HeightBand::High, 4, {7, 1}},
      {4, HeightBand::Mid, 4, {7, 7}},
  };
  ASSERT_EQ(a.objects.size(), golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) {
    SCOPED_TRACE(i);
    EXPECT_EQ(a.objects[i].class_id, golden[i].cls);
    EXPECT_EQ(a.objects[i].band, golden[i].band);
    EXPECT_EQ(a.objects[i].color_id, golden[i].color);
    EXPECT_EQ(a.objects[i].footprint, std::vector<Cell>{golden[i].cell});
    EXPECT_TRUE(a.objects[i].pickupable);
  }
}

TEST(SceneParse, ShippedAssetsAreWellFormed) {
  const SceneLibrary lib = SceneLibrary::shipped();
  EXPECT_EQ(lib.ids(), (std::vector<int>{1, 2, 3, 4, 5}));
  for (int id = 1; id <= 4; ++id) {
    SCOPED_TRACE(id);
    const SceneAsset& a = lib.get(id);
    EXPECT_GE(a.map.width(), 9);
    EXPECT_LE(a.map.width(), 15);
    EXPECT_GE(a.map.height(), 7);
    EXPECT_LE(a.map.height(), 15);
    // Every pickupable object can be reached from every free floor cell.
    std::set<Cell> occupied;
    for (const auto& o : a.objects) occupied.insert(o.footprint.begin(), o.footprint.end());
    for (const auto& o : a.objects) {
      if (!o.pickupable) continue;
      for (int r = 0; r < a.map.height(); ++r) {
        for (int c = 0; c < a.map.width(); ++c) {
          if (!a.map.is_floor({r, c}) || occupied.count({r, c})) continue;
          EXPECT_TRUE(dijkstra_to_neighbour(a.map, {r, c}, o.cell()).has_value());
        }
      }
    }
  }
  const SceneAsset& corridor = lib.get(5);
  ASSERT_TRUE(corridor.start.has_value());
  EXPECT_EQ(corridor.start->cell, (Cell{1, 1}));
  EXPECT_EQ(corridor.start->heading, Heading::E);
}

TEST(SceneParse, RejectsMalformedAssets) {
  expect_parse_error("#####\n#...#\n#####\n", "missing '# id:'");
  expect_parse_error("# id: 3\n# object: a Mug Mid 1 pickup at=0,0\n#####\n#...#\n#####\n",
                     "object on obstacle");
  expect_parse_error("# id: 3\n# object: a Mug Mid 1 pickup\n# object: b Fork Low 2 pickup at=1,1\n"
                     "#####\n#a..#\n#####\n",
                     "duplicate object cell");
  expect_parse_error("# id: 3\n#####\n#.z.#\n#####\n", "not in inventory");
  expect_parse_error("# id: 3\n#####\n#...#\n####\n", "not rectangular");
  expect_parse_error("# id: 3\n#####\n#....\n#####\n", "border cell");
  expect_parse_error("# id: 3\n#####\n#.#.#\n#####\n", "connected component");
  expect_parse_error("# id: 3\n# object: a Spoon Mid 1 pickup\n#####\n#a..#\n#####\n",
                     "unknown class");
  expect_parse_error("# id: 3\n# object: a Mug Mid 9 pickup\n#####\n#a..#\n#####\n", "color");
  expect_parse_error("# id: 3\n# object: a Mug Mid 1 pickup\n#####\n#a.a#\n#####\n",
                     "one cell");
  expect_parse_error("# id: 3\n# start: 1 2 E\n# object: a Mug Mid 1 pickup\n#####\n#.a.#\n#####\n",
                     "start cell");
}

TEST(SceneParse, ErrorCarriesPosition) {
  try {
    load_scene("# id: 3\n#####\n#.?.#\n#####\n");
    FAIL();
  } catch (const SceneParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 3);
  }
}

TEST(SceneRender, ReparsesToSameLayout) {
  const SceneAsset a = load_scene(kRoom);
  const std::string text = render_scene(a);
  EXPECT_EQ(text.substr(0, text.find('\n')), "Room (id 7, 9x8)");
  EXPECT_NE(text.find("#..a....#"), std::string::npos);
  EXPECT_NE(text.find("#.k...tt#"), std::string::npos);
  EXPECT_NE(text.find("Container"), std::string::npos);
}

TEST(SceneReset, RejectsBadSpecs) {
  const SceneLibrary lib = library_with(kRoom);
  EXPECT_THROW(state_at(lib, 8, 0, {1, 1}, Heading::N), ContractViolation);
  EXPECT_THROW(state_at(lib, 7, 3, {1, 1}, Heading::N), ContractViolation);  // no Bread
  EXPECT_THROW(state_at(lib, 7, 7, {1, 1}, Heading::N), ContractViolation);  // Container is fixed
  EXPECT_THROW(state_at(lib, 7, 0, {0, 0}, Heading::N), ContractViolation);
  EXPECT_THROW(state_at(lib, 7, 0, {2, 3}, Heading::N), ContractViolation);
  EXPECT_THROW(state_at(lib, 7, 0, {1, 1}, Heading::N, Pitch::Level, 0), ContractViolation);
}

TEST(SceneReset, SameSpecSameState) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState a = state_at(lib, 7, 0, {1, 1}, Heading::E, Pitch::Level, 200, 42);
  WorldState b = state_at(lib, 7, 0, {1, 1}, Heading::E, Pitch::Level, 200, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.steps, 0);
  EXPECT_FALSE(a.terminal);
  EXPECT_FALSE(a.agent.holding.has_value());
  WorldState c = state_at(lib, 7, 0, {1, 1}, Heading::E, Pitch::Level, 200, 43);
  EXPECT_FALSE(a == c);
}

TEST(SceneStep, MoveAndCollide) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 0, {1, 1}, Heading::E);
  StepOutcome o = step(s, Action::MoveAhead);
  EXPECT_FALSE(o.collided);
  EXPECT_EQ(s.agent.cell, (Cell{1, 2}));

  s = state_at(lib, 7, 0, {1, 1}, Heading::N);
  o = step(s, Action::MoveAhead);
  EXPECT_TRUE(o.collided);
  EXPECT_EQ(s.agent.cell, (Cell{1, 1}));
  EXPECT_EQ(o.steps_elapsed, 1);

  // Objects block movement like walls.
  s = state_at(lib, 7, 0, {1, 3}, Heading::S);
  o = step(s, Action::MoveAhead);
  EXPECT_TRUE(o.collided);
  EXPECT_EQ(s.agent.cell, (Cell{1, 3}));
}

TEST(SceneStep, RotationsCompose) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  const Heading right_order[] = {Heading::E, Heading::S, Heading::W, Heading::N};
  for (Heading h : right_order) {
    step(s, Action::RotateRight);
    EXPECT_EQ(s.agent.heading, h);
  }
  step(s, Action::RotateLeft);
  EXPECT_EQ(s.agent.heading, Heading::W);
  step(s, Action::RotateRight);
  EXPECT_EQ(s.agent.heading, Heading::N);
  EXPECT_EQ(s.agent.cell, (Cell{3, 3}));
}

TEST(SceneStep, PitchClamps) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  EXPECT_FALSE(step(s, Action::LookUp).invalid_action);
  EXPECT_EQ(s.agent.pitch, Pitch::Up);
  EXPECT_TRUE(step(s, Action::LookUp).invalid_action);
  EXPECT_EQ(s.agent.pitch, Pitch::Up);
  step(s, Action::LookDown);
  step(s, Action::LookDown);
  EXPECT_EQ(s.agent.pitch, Pitch::Down);
  EXPECT_TRUE(step(s, Action::LookDown).invalid_action);
}

TEST(SceneStep, PickupTargetEndsEpisode) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 0, {3, 3}, Heading::N);
  const StepOutcome o = step(s, Action::PickupObject);
  EXPECT_TRUE(o.pickup_attempted);
  EXPECT_TRUE(o.pickup_succeeded);
  EXPECT_TRUE(o.success);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.picked_instance, 0);
  EXPECT_EQ(s.agent.holding, 0);
  EXPECT_TRUE(s.objects[0].held);
  EXPECT_FALSE(s.object_at({2, 3}).has_value());
  EXPECT_THROW(step(s, Action::RotateLeft), ContractViolation);
}

TEST(SceneStep, PickupNeedsMatchingPitch) {
  const SceneLibrary lib = library_with(kRoom);
  for (auto [cell, heading, band_obj] : {std::tuple{Cell{3, 3}, Heading::N, 0},
                                         std::tuple{Cell{3, 2}, Heading::S, 1},
                                         std::tuple{Cell{5, 2}, Heading::S, 2}}) {
    const HeightBand band = lib.get(7).objects[band_obj].band;
    EXPECT_EQ(pitch_for_band(band), expected_pitch(band));
    for (Pitch p : {Pitch::Down, Pitch::Level, Pitch::Up}) {
      WorldState s = state_at(lib, 7, lib.get(7).objects[band_obj].class_id, cell, heading, p);
      const StepOutcome o = step(s, Action::PickupObject);
      EXPECT_EQ(o.pickup_succeeded, p == expected_pitch(band)) << band_obj << " " << int(p);
      EXPECT_EQ(o.invalid_action, !o.pickup_succeeded);
    }
  }
}

TEST(SceneStep, WrongPickupKeepsEpisodeAlive) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 2, {3, 3}, Heading::N);  // target Knife, facing Mug
  StepOutcome o = step(s, Action::PickupObject);
  EXPECT_TRUE(o.pickup_succeeded);
  EXPECT_FALSE(o.success);
  EXPECT_FALSE(o.terminal);
  EXPECT_EQ(s.agent.holding, 0);

  // Already holding: a second pickup is invalid.
  step(s, Action::RotateLeft);
  step(s, Action::RotateLeft);
  o = step(s, Action::DropObject);  // ahead (4,3) is free floor
  EXPECT_FALSE(o.invalid_action);
  EXPECT_FALSE(s.agent.holding.has_value());
  EXPECT_EQ(s.objects[0].footprint, (std::vector<Cell>{{4, 3}}));
  EXPECT_EQ(s.object_at({4, 3}), 0u);

  o = step(s, Action::DropObject);
  EXPECT_TRUE(o.invalid_action);
}

TEST(SceneStep, DropNeedsFreeFloorAhead) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 2, {3, 3}, Heading::N);
  step(s, Action::PickupObject);
  step(s, Action::RotateLeft);
  step(s, Action::MoveAhead);
  step(s, Action::MoveAhead);  // (3,1), facing W at the wall
  EXPECT_EQ(s.agent.cell, (Cell{3, 1}));
  EXPECT_TRUE(step(s, Action::DropObject).invalid_action);
  step(s, Action::RotateLeft);  // facing S, (4,1) is free
  EXPECT_FALSE(step(s, Action::DropObject).invalid_action);
  EXPECT_EQ(s.objects[0].cell(), (Cell{4, 1}));
}

TEST(SceneStep, BudgetEndsEpisode) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 0, {1, 1}, Heading::N, Pitch::Level, 3);
  EXPECT_FALSE(step(s, Action::RotateLeft).terminal);
  EXPECT_FALSE(step(s, Action::RotateLeft).terminal);
  const StepOutcome o = step(s, Action::RotateLeft);
  EXPECT_TRUE(o.terminal);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.steps_elapsed, 3);
  EXPECT_THROW(step(s, Action::MoveAhead), ContractViolation);
}

TEST(SceneStep, RandomWalkInvariants) {
  const SceneLibrary lib = SceneLibrary::shipped();
  std::mt19937_64 rng(5);
  for (int id = 1; id <= 4; ++id) {
    const SceneAsset& a = lib.get(id);
    for (int episode = 0; episode < 20; ++episode) {
      std::vector<int> targets;
      for (const auto& o : a.objects) {
        if (o.pickupable) targets.push_back(o.class_id);
      }
      EpisodeSpec spec;
      spec.scene_id = id;
      spec.target_class = targets[rng() % targets.size()];
      const auto free = free_floor_cells(bare_state(a.map, {}));
      std::vector<Cell> starts;
      for (Cell c : free) {
        bool covered = false;
        for (const auto& o : a.objects) {
          covered = covered || std::count(o.footprint.begin(), o.footprint.end(), c) > 0;
        }
        if (!covered) starts.push_back(c);
      }
      spec.start_pose.cell = starts[rng() % starts.size()];
      spec.start_pose.heading = static_cast<Heading>(rng() % 4);
      spec.max_steps = 150;
      spec.rng_seed = rng();
      WorldState s = reset(lib, spec);
      while (!s.terminal) {
        const int before = s.steps;
        const StepOutcome o = step(s, static_cast<Action>(rng() % kActionCount));
        ASSERT_EQ(s.steps, before + 1);
        ASSERT_TRUE(s.map().is_floor(s.agent.cell));
        ASSERT_FALSE(s.object_at(s.agent.cell).has_value());
        ASSERT_EQ(s.objects.size(), a.objects.size());
        int held = 0;
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
          ASSERT_EQ(s.objects[i].instance_id, a.objects[i].instance_id);
          ASSERT_EQ(s.objects[i].class_id, a.objects[i].class_id);
          if (s.objects[i].held) {
            ++held;
            ASSERT_EQ(s.agent.holding, s.objects[i].instance_id);
          } else {
            for (Cell c : s.objects[i].footprint) ASSERT_TRUE(s.map().is_floor(c));
          }
        }
        ASSERT_EQ(held, s.agent.holding ? 1 : 0);
        ASSERT_EQ(o.terminal, o.success || s.steps >= s.max_steps);
      }
    }
  }
}

TEST(SceneStep, ReplayIsDeterministic) {
  const SceneLibrary lib = SceneLibrary::shipped();
  std::mt19937_64 rng(11);
  std::vector<Action> actions(120);
  for (auto& a : actions) a = static_cast<Action>(rng() % kActionCount);
  auto run = [&] {
    const SceneAsset& asset = lib.get(2);
    const Cell start = asset.start ? asset.start->cell : free_floor_cells(bare_state(asset.map, {}))[12];
    WorldState s = state_at(lib, 2, asset.objects[0].class_id, start, Heading::S, Pitch::Level, 200, 9);
    std::vector<StepOutcome> out;
    for (Action a : actions) {
      if (s.terminal) break;
      out.push_back(step(s, a));
    }
    return std::pair{out, s};
  };
  const auto [o1, s1] = run();
  const auto [o2, s2] = run();
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(s1, s2);
}

TEST(SceneVisibility, RayMatchesRoundingOracle) {
  for (int dr = -6; dr <= 6; ++dr) {
    for (int dc = -6; dc <= 6; ++dc) {
      const Cell from{7, 7};
      const Cell to{7 + dr, 7 + dc};
      EXPECT_EQ(ray_cells(from, to), oracle_ray(from, to)) << dr << "," << dc;
    }
  }
  EXPECT_TRUE(ray_cells({3, 3}, {3, 4}).empty());
  EXPECT_EQ(ray_cells({0, 0}, {0, 3}), (std::vector<Cell>{{0, 1}, {0, 2}}));
  // Half-steps round away from zero on both sides.
  EXPECT_EQ(ray_cells({0, 0}, {1, 2}), (std::vector<Cell>{{1, 1}}));
  EXPECT_EQ(ray_cells({0, 0}, {-1, -2}), (std::vector<Cell>{{-1, -1}}));
}

TEST(SceneVisibility, ConeMatchesOracle) {
  for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
    const AgentPose pose{{8, 8}, h, Pitch::Level, std::nullopt};
    int count = 0;
    for (int r = 0; r < 17; ++r) {
      for (int c = 0; c < 17; ++c) {
        EXPECT_EQ(in_view_cone(pose, {r, c}), oracle_in_cone(pose, {r, c}));
        count += in_view_cone(pose, {r, c});
      }
    }
    EXPECT_EQ(count, 3 + 5 + 7 + 9 + 11);
    EXPECT_FALSE(in_view_cone(pose, pose.cell));
  }
}

TEST(SceneVisibility, RandomMapsMatchBruteForce) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const GridMap map = random_map(rng, 15, 0.3);
    AgentPose pose;
    do {
      pose.cell = {int(rng() % 15), int(rng() % 15)};
    } while (!map.is_floor(pose.cell));
    pose.heading = static_cast<Heading>(rng() % 4);
    const WorldState s = bare_state(map, pose);
    const std::vector<Cell> got = visible_cells(s);
    EXPECT_EQ(std::set<Cell>(got.begin(), got.end()), oracle_visible(map, pose)) << trial;
    EXPECT_EQ(std::set<Cell>(got.begin(), got.end()).size(), got.size());
    // Nearest first.
    for (std::size_t i = 1; i < got.size(); ++i) {
      ASSERT_LE(depth_lateral(pose, got[i - 1]).first, depth_lateral(pose, got[i]).first);
    }
    for (Cell c : got) {
      EXPECT_LE(std::max(std::abs(c.row - pose.cell.row), std::abs(c.col - pose.cell.col)), 5);
    }
  }
}

TEST(SceneVisibility, WallsOccludeAndAreSeen) {
  const SceneLibrary lib = SceneLibrary::shipped();
  // FloorPlan1 row 3 is "#.##.##.#"; from (4,2) facing N the wall at (3,2) hides (2,2) and (1,2).
  const WorldState s = state_at(lib, 1, 0, {4, 2}, Heading::N);
  const auto cells = visible_cells(s);
  auto has = [&](Cell c) { return std::find(cells.begin(), cells.end(), c) != cells.end(); };
  EXPECT_TRUE(has({3, 2}));
  EXPECT_FALSE(has({2, 2}));
  EXPECT_FALSE(has({1, 2}));
  EXPECT_FALSE(has({5, 2}));  // behind
}

TEST(SceneVisibility, ObjectsNeedBandPitch) {
  const SceneLibrary lib = library_with(kRoom);
  // From (6,3) facing N the Mug (2,3) and Knife (4,2) are in the cone, the Container is not.
  auto indices = [&](Pitch p) {
    const WorldState s = state_at(lib, 7, 0, {6, 3}, Heading::N, p);
    std::set<std::size_t> out;
    for (const auto& v : visible_objects(s)) out.insert(v.object_index);
    return out;
  };
  EXPECT_EQ(indices(Pitch::Level), (std::set<std::size_t>{0}));
  EXPECT_EQ(indices(Pitch::Down), (std::set<std::size_t>{1}));
  EXPECT_TRUE(indices(Pitch::Up).empty());  // Phone is beside, not ahead
}

TEST(SceneVisibility, PartialFootprint) {
  const SceneLibrary lib = library_with(kRoom);
  // From (1,6) facing S, depth 3 allows lateral 3: both Container cells (4,6),(4,7) are seen.
  WorldState s = state_at(lib, 7, 0, {1, 6}, Heading::S);
  auto vis = visible_objects(s);
  auto it = std::find_if(vis.begin(), vis.end(), [](const VisibleObject& v) { return v.object_index == 3; });
  ASSERT_NE(it, vis.end());
  EXPECT_EQ(it->footprint.size(), 2u);
  // From (5,5) facing N the anchor (4,6) is at lateral 1, the second cell (4,7) at lateral 2.
  s = state_at(lib, 7, 0, {5, 5}, Heading::N);
  vis = visible_objects(s);
  it = std::find_if(vis.begin(), vis.end(), [](const VisibleObject& v) { return v.object_index == 3; });
  ASSERT_NE(it, vis.end());
  EXPECT_EQ(it->footprint, (std::vector<Cell>{{4, 6}}));
}

TEST(SceneVisibility, HeldObjectsAreInvisible) {
  const SceneLibrary lib = library_with(kRoom);
  WorldState s = state_at(lib, 7, 2, {3, 3}, Heading::N);
  ASSERT_FALSE(visible_objects(s).empty());
  step(s, Action::PickupObject);
  for (const auto& v : visible_objects(s)) EXPECT_NE(v.object_index, 0u);
}

TEST(ShortestPath, SmallCases) {
  const SceneAsset a = load_scene(kRoom);
  EXPECT_EQ(shortest_path_length(a.map, {3, 3}, {2, 3}), 0);
  EXPECT_EQ(shortest_path_length(a.map, {1, 1}, {2, 3}), 2);
  EXPECT_EQ(shortest_path_length(a.map, {0, 0}, {2, 3}), std::nullopt);
  const SceneAsset corridor = SceneLibrary::shipped().get(5);
  EXPECT_EQ(shortest_path_length(corridor.map, {1, 1}, {1, 6}), 4);
}

TEST(ShortestPath, MatchesDijkstraOnRandomMaps) {
  std::mt19937_64 rng(77);
  int reachable = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const GridMap map = random_map(rng, 15, 0.25);
    for (int q = 0; q < 20; ++q) {
      const Cell from{int(rng() % 15), int(rng() % 15)};
      const Cell target{int(1 + rng() % 13), int(1 + rng() % 13)};
      const auto got = shortest_path_length(map, from, target);
      EXPECT_EQ(got, dijkstra_to_neighbour(map, from, target)) << trial << "/" << q;
      reachable += got.has_value();
    }
  }
  EXPECT_GT(reachable, 500);  // the sample exercises real paths
}
