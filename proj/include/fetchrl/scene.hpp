#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fetchrl/common.hpp"

namespace fetchrl {

inline constexpr int kNumClasses = 8;
inline constexpr int kNumColors = 5;
inline constexpr int kFovDepth = 5;
inline constexpr int kDefaultMaxSteps = 200;

/// Class names in class_id order.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Mug", "Apple", "Knife", "Bread", "Pot", "Fork", "Phone", "Container"};

/// Default appearance of each class. Several pairs alias on purpose
/// (Mug/Apple, Knife/Fork, Pot/Phone): appearance alone cannot tell them
/// apart, class labels can.
inline constexpr std::array<int, kNumClasses> kDefaultClassColor = {1, 1, 2, 3,
                                                                    4, 2, 4, 5};

std::optional<int> class_id_from_name(std::string_view name);

enum class CellKind : std::uint8_t { Floor, Obstacle };
enum class Heading : std::uint8_t { N, E, S, W };
enum class Pitch : std::uint8_t { Down, Level, Up };
enum class HeightBand : std::uint8_t { Low, Mid, High };

enum class Action : std::uint8_t {
  MoveAhead,
  RotateLeft,
  RotateRight,
  LookUp,
  LookDown,
  PickupObject,
  DropObject,
};
inline constexpr int kActionCount = 7;

std::string_view to_string(Action a);
std::string_view to_string(Heading h);
std::string_view to_string(Pitch p);
std::string_view to_string(HeightBand b);
std::optional<Heading> heading_from_string(std::string_view s);
std::optional<HeightBand> band_from_string(std::string_view s);

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Unit step (row, col) taken by MoveAhead for each heading.
Cell heading_delta(Heading h);

/// Pitch that makes objects of the given band visible.
Pitch pitch_for_band(HeightBand b);

class GridMap {
 public:
  GridMap() = default;
  GridMap(int id, std::string name, int width, int height,
          std::vector<CellKind> cells);

  int id() const { return id_; }
  const std::string& name() const { return name_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_;
  }
  CellKind at(Cell c) const { return cells_[index(c)]; }
  // Out-of-bounds cells read as Obstacle.
  bool is_floor(Cell c) const {
    return in_bounds(c) && at(c) == CellKind::Floor;
  }
  int index(Cell c) const { return c.row * width_ + c.col; }
  const std::vector<CellKind>& cells() const { return cells_; }

  bool operator==(const GridMap&) const = default;

 private:
  int id_ = 0;
  std::string name_;
  int width_ = 0;
  int height_ = 0;
  std::vector<CellKind> cells_;
};

struct SceneObject {
  int instance_id = 0;
  int class_id = 0;
  int color_id = 0;
  // Occupied cells; footprint.front() is the anchor cell. Pickupable objects
  // always have a single-cell footprint.
  std::vector<Cell> footprint;
  HeightBand band = HeightBand::Mid;
  bool pickupable = false;
  bool held = false;

  Cell cell() const { return footprint.front(); }
  bool operator==(const SceneObject&) const = default;
};

struct AgentPose {
  Cell cell;
  Heading heading = Heading::N;
  Pitch pitch = Pitch::Level;
  std::optional<int> holding;

  bool operator==(const AgentPose&) const = default;
};

struct SceneAsset {
  GridMap map;
  std::vector<SceneObject> objects;
  // Optional fixed start pose declared in the asset header.
  std::optional<AgentPose> start;
  // Raw `# key: value` header entries in file order.
  std::vector<std::pair<std::string, std::string>> header;
};

class SceneParseError : public Error {
 public:
  SceneParseError(int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses the plain-text scene format:
///
///   # id: 1
///   # name: FloorPlan1
///   # object: <letter> <Class> <Low|Mid|High> <color_id> <pickup|fixed>
///   # start: <row> <col> <N|E|S|W>          (optional)
///   #########
///   #..a....#
///   #########
///
/// `#` is Obstacle, `.` is Floor, a letter places (part of) the inventory
/// object with that letter on a Floor cell. A letter may repeat to give a
/// fixed object a multi-cell footprint.
SceneAsset load_scene(std::string_view text);

/// Grid with object letters (from the header inventory), start pose marked
/// by its heading arrow, then one legend line per object.
std::string render_scene(const SceneAsset& asset);

/// The shipped floor plans (ids 1-4) plus any extra assets registered by
/// callers. Lookup is by scene id.
class SceneLibrary {
 public:
  static SceneLibrary shipped();

  void add(SceneAsset asset);
  const SceneAsset& get(int scene_id) const;
  std::shared_ptr<const SceneAsset> share(int scene_id) const;
  bool contains(int scene_id) const { return assets_.count(scene_id) != 0; }
  std::vector<int> ids() const;

 private:
  std::map<int, std::shared_ptr<const SceneAsset>> assets_;
};

/// Text of a shipped asset by id: floor plans 1-4 and the corridor task (5).
std::string_view shipped_scene_text(int scene_id);

struct EpisodeSpec {
  int scene_id = 1;
  int target_class = 0;
  AgentPose start_pose;
  int max_steps = kDefaultMaxSteps;
  std::uint64_t rng_seed = 0;
};

struct StepOutcome {
  bool collided = false;
  bool invalid_action = false;
  bool pickup_attempted = false;
  bool pickup_succeeded = false;
  std::optional<int> picked_instance;
  bool success = false;
  bool terminal = false;
  int steps_elapsed = 0;

  bool operator==(const StepOutcome&) const = default;
};

/// The world state s_t. Value type; copying a state forks the episode,
/// including its random stream.
struct WorldState {
  std::shared_ptr<const SceneAsset> asset;
  int target_class = 0;
  std::vector<SceneObject> objects;
  AgentPose agent;
  int steps = 0;
  int max_steps = kDefaultMaxSteps;
  bool terminal = false;
  Rng rng;

  const GridMap& map() const { return asset->map; }
  // Index into `objects` of the object covering `c`, if any (held objects
  // cover nothing).
  std::optional<std::size_t> object_at(Cell c) const;

  bool operator==(const WorldState& o) const;
};

WorldState reset(const SceneLibrary& library, const EpisodeSpec& spec);

/// Advances the world by one action. Throws ContractViolation on a terminal
/// state.
StepOutcome step(WorldState& state, Action action);

/// Forward cone cells with unobstructed line of sight, nearest first.
/// Obstacle cells terminating a ray are included (they are seen).
std::vector<Cell> visible_cells(const WorldState& state);

/// Cells on the discrete ray strictly between `from` and `to`.
std::vector<Cell> ray_cells(Cell from, Cell to);

/// Whether `c` lies in the agent's forward cone of depth kFovDepth.
bool in_view_cone(const AgentPose& pose, Cell c);

struct VisibleObject {
  std::size_t object_index;
  std::vector<Cell> footprint;
};

/// Objects whose anchor is in the forward cone with line of sight and whose
/// band matches the pitch. Footprints list the visible cells only.
std::vector<VisibleObject> visible_objects(const WorldState& state);

/// BFS steps over Floor cells from `from` to the nearest Floor cell 4-adjacent
/// to `target`. Expansion order N, E, S, W.
std::optional<int> shortest_path_length(const GridMap& map, Cell from,
                                        Cell target);

/// All Floor cells not covered by an object.
std::vector<Cell> free_floor_cells(const WorldState& state);

}  // namespace fetchrl
