#include "fetchrl/scene.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <deque>
#include <sstream>

namespace fetchrl {

namespace {

constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "MoveAhead", "RotateLeft",   "RotateRight", "LookUp",
    "LookDown",  "PickupObject", "DropObject"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_grid_row(std::string_view line) {
  if (line.empty()) return false;
  return std::all_of(line.begin(), line.end(), [](char c) {
    return c == '#' || c == '.' || std::isalpha(static_cast<unsigned char>(c));
  });
}

struct PendingObject {
  char letter;
  SceneObject object;
  std::optional<Cell> at;
  int line;
};

Heading rotate_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}
Heading rotate_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

// Rounds offset/n half away from zero using integers only.
int round_ratio(int offset, int n) {
  const int mag = (2 * std::abs(offset) + n) / (2 * n);
  return offset < 0 ? -mag : mag;
}

}  // namespace

std::optional<int> class_id_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Action a) {
  return kActionNames[static_cast<int>(a)];
}
std::string_view to_string(Heading h) {
  constexpr std::array<std::string_view, 4> names = {"N", "E", "S", "W"};
  return names[static_cast<int>(h)];
}
std::string_view to_string(Pitch p) {
  constexpr std::array<std::string_view, 3> names = {"Down", "Level", "Up"};
  return names[static_cast<int>(p)];
}
std::string_view to_string(HeightBand b) {
  constexpr std::array<std::string_view, 3> names = {"Low", "Mid", "High"};
  return names[static_cast<int>(b)];
}

std::optional<Heading> heading_from_string(std::string_view s) {
  for (int i = 0; i < 4; ++i) {
    if (to_string(static_cast<Heading>(i)) == s) return static_cast<Heading>(i);
  }
  return std::nullopt;
}

std::optional<HeightBand> band_from_string(std::string_view s) {
  for (int i = 0; i < 3; ++i) {
    if (to_string(static_cast<HeightBand>(i)) == s) {
      return static_cast<HeightBand>(i);
    }
  }
  return std::nullopt;
}

Cell heading_delta(Heading h) {
  switch (h) {
    case Heading::N:
      return {-1, 0};
    case Heading::E:
      return {0, 1};
    case Heading::S:
      return {1, 0};
    case Heading::W:
      return {0, -1};
  }
  return {0, 0};
}

Pitch pitch_for_band(HeightBand b) {
  switch (b) {
    case HeightBand::Low:
      return Pitch::Down;
    case HeightBand::Mid:
      return Pitch::Level;
    case HeightBand::High:
      return Pitch::Up;
  }
  return Pitch::Level;
}

GridMap::GridMap(int id, std::string name, int width, int height,
                 std::vector<CellKind> cells)
    : id_(id),
      name_(std::move(name)),
      width_(width),
      height_(height),
      cells_(std::move(cells)) {}

SceneParseError::SceneParseError(int line, int column, const std::string& what)
    : Error("scene:" + std::to_string(line) + ":" + std::to_string(column) +
            ": " + what),
      line_(line),
      column_(column) {}

SceneAsset load_scene(std::string_view text) {
  SceneAsset asset;
  std::vector<PendingObject> pending;
  std::vector<std::string> rows;
  int first_grid_line = 0;
  bool blank_after_grid = false;
  std::optional<int> id;
  std::string name;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::string_view line = trim(raw);
    if (line.empty()) {
      if (!rows.empty()) blank_after_grid = true;
      if (end == text.size()) break;
      continue;
    }

    if (line.size() >= 2 && line[0] == '#' && line[1] == ' ') {
      if (!rows.empty()) {
        throw SceneParseError(line_no, 1, "header line after grid");
      }
      std::string_view body = trim(line.substr(2));
      std::size_t colon = body.find(':');
      if (colon == std::string_view::npos) {
        throw SceneParseError(line_no, 3, "header line without ':'");
      }
      std::string key(trim(body.substr(0, colon)));
      std::string_view value = trim(body.substr(colon + 1));
      asset.header.emplace_back(key, std::string(value));

      if (key == "id") {
        id = parse_int(value);
        if (!id) throw SceneParseError(line_no, 3, "bad id '" + std::string(value) + "'");
      } else if (key == "name") {
        name = std::string(value);
      } else if (key == "object") {
        auto fields = split_ws(value);
        if (fields.size() < 5 || fields.size() > 6 || fields[0].size() != 1 ||
            !std::isalpha(static_cast<unsigned char>(fields[0][0]))) {
          throw SceneParseError(
              line_no, 3,
              "expected 'object: <letter> <Class> <band> <color> <pickup|fixed> "
              "[at=r,c]'");
        }
        PendingObject p{fields[0][0], {}, std::nullopt, line_no};
        auto cls = class_id_from_name(fields[1]);
        if (!cls) throw SceneParseError(line_no, 3, "unknown class '" + std::string(fields[1]) + "'");
        auto band = band_from_string(fields[2]);
        if (!band) throw SceneParseError(line_no, 3, "unknown band '" + std::string(fields[2]) + "'");
        auto color = parse_int(fields[3]);
        if (!color || *color < 1 || *color > kNumColors) {
          throw SceneParseError(line_no, 3, "color must be in 1.." + std::to_string(kNumColors));
        }
        if (fields[4] != "pickup" && fields[4] != "fixed") {
          throw SceneParseError(line_no, 3, "expected 'pickup' or 'fixed'");
        }
        if (fields.size() == 6) {
          std::string_view at = fields[5];
          std::size_t comma = at.find(',');
          if (at.substr(0, 3) != "at=" || comma == std::string_view::npos) {
            throw SceneParseError(line_no, 3, "expected at=<row>,<col>");
          }
          auto r = parse_int(at.substr(3, comma - 3));
          auto c = parse_int(at.substr(comma + 1));
          if (!r || !c) throw SceneParseError(line_no, 3, "bad at= coordinates");
          p.at = Cell{*r, *c};
        }
        for (const auto& q : pending) {
          if (q.letter == p.letter) {
            throw SceneParseError(line_no, 3, std::string("duplicate object letter '") + p.letter + "'");
          }
        }
        p.object.instance_id = static_cast<int>(pending.size());
        p.object.class_id = *cls;
        p.object.color_id = *color;
        p.object.band = *band;
        p.object.pickupable = fields[4] == "pickup";
        pending.push_back(std::move(p));
      } else if (key == "start") {
        auto fields = split_ws(value);
        std::optional<int> r, c;
        std::optional<Heading> h;
        if (fields.size() == 3) {
          r = parse_int(fields[0]);
          c = parse_int(fields[1]);
          h = heading_from_string(fields[2]);
        }
        if (!r || !c || !h) {
          throw SceneParseError(line_no, 3, "expected 'start: <row> <col> <N|E|S|W>'");
        }
        asset.start = AgentPose{{*r, *c}, *h, Pitch::Level, std::nullopt};
      }
      continue;
    }

    if (!is_grid_row(line)) {
      auto bad = std::find_if(line.begin(), line.end(), [](char c) {
        return !(c == '#' || c == '.' || std::isalpha(static_cast<unsigned char>(c)));
      });
      throw SceneParseError(line_no, static_cast<int>(bad - line.begin()) + 1,
                            std::string("unexpected character '") + *bad + "'");
    }
    if (blank_after_grid) throw SceneParseError(line_no, 1, "blank line in grid");
    if (rows.empty()) first_grid_line = line_no;
    if (!rows.empty() && line.size() != rows.front().size()) {
      throw SceneParseError(line_no, 1, "grid is not rectangular");
    }
    rows.emplace_back(line);
    if (end == text.size()) break;
  }

  if (!id) throw SceneParseError(1, 1, "missing '# id:' header");
  if (rows.empty()) throw SceneParseError(line_no, 1, "missing grid");

  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  std::vector<CellKind> cells(static_cast<std::size_t>(width * height));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const char ch = rows[r][c];
      cells[r * width + c] = ch == '#' ? CellKind::Obstacle : CellKind::Floor;
      if (std::isalpha(static_cast<unsigned char>(ch))) {
        auto it = std::find_if(pending.begin(), pending.end(),
                               [&](const PendingObject& p) { return p.letter == ch; });
        if (it == pending.end()) {
          throw SceneParseError(first_grid_line + r, c + 1,
                                std::string("letter '") + ch + "' not in inventory");
        }
        if (it->at) {
          throw SceneParseError(first_grid_line + r, c + 1,
                                std::string("object '") + ch + "' placed twice");
        }
        it->object.footprint.push_back({r, c});
      }
      const bool border = r == 0 || c == 0 || r == height - 1 || c == width - 1;
      if (border && cells[r * width + c] != CellKind::Obstacle) {
        throw SceneParseError(first_grid_line + r, c + 1, "border cell is not an obstacle");
      }
    }
  }
  asset.map = GridMap(*id, name, width, height, std::move(cells));
  const GridMap& map = asset.map;

  std::vector<int> owner(static_cast<std::size_t>(width * height), -1);
  for (auto& p : pending) {
    if (p.at) p.object.footprint.push_back(*p.at);
    if (p.object.footprint.empty()) {
      throw SceneParseError(p.line, 3, std::string("object '") + p.letter + "' not placed");
    }
    if (p.object.pickupable && p.object.footprint.size() != 1) {
      throw SceneParseError(p.line, 3, "pickupable objects must occupy one cell");
    }
    for (Cell c : p.object.footprint) {
      if (!map.in_bounds(c) || map.at(c) != CellKind::Floor) {
        throw SceneParseError(p.line, 3, "object on obstacle");
      }
      int& o = owner[map.index(c)];
      if (o >= 0) throw SceneParseError(p.line, 3, "duplicate object cell");
      o = p.object.instance_id;
    }
    asset.objects.push_back(p.object);
  }

  // Floor connectivity.
  std::vector<char> seen(static_cast<std::size_t>(width * height), 0);
  int floor_count = 0;
  std::optional<Cell> seed;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (map.at({r, c}) == CellKind::Floor) {
        ++floor_count;
        if (!seed) seed = Cell{r, c};
      }
    }
  }
  if (!seed) throw SceneParseError(first_grid_line, 1, "map has no floor");
  std::deque<Cell> queue{*seed};
  seen[map.index(*seed)] = 1;
  int reached = 1;
  while (!queue.empty()) {
    Cell cur = queue.front();
    queue.pop_front();
    for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
      Cell d = heading_delta(h);
      Cell n{cur.row + d.row, cur.col + d.col};
      if (map.is_floor(n) && !seen[map.index(n)]) {
        seen[map.index(n)] = 1;
        ++reached;
        queue.push_back(n);
      }
    }
  }
  if (reached != floor_count) {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        if (map.at({r, c}) == CellKind::Floor && !seen[map.index({r, c})]) {
          throw SceneParseError(first_grid_line + r, c + 1,
                                "floor is not a single connected component");
        }
      }
    }
  }

  if (asset.start) {
    Cell s = asset.start->cell;
    if (!map.is_floor(s) || owner[map.index(s)] >= 0) {
      throw SceneParseError(1, 1, "start cell is not free floor");
    }
  }
  return asset;
}

SceneLibrary SceneLibrary::shipped() {
  SceneLibrary lib;
  for (int id = 1; id <= 5; ++id) lib.add(load_scene(shipped_scene_text(id)));
  return lib;
}

void SceneLibrary::add(SceneAsset asset) {
  const int id = asset.map.id();
  assets_[id] = std::make_shared<const SceneAsset>(std::move(asset));
}

const SceneAsset& SceneLibrary::get(int scene_id) const {
  return *share(scene_id);
}

std::shared_ptr<const SceneAsset> SceneLibrary::share(int scene_id) const {
  auto it = assets_.find(scene_id);
  if (it == assets_.end()) {
    throw ContractViolation("unknown scene_id " + std::to_string(scene_id));
  }
  return it->second;
}

std::vector<int> SceneLibrary::ids() const {
  std::vector<int> out;
  for (const auto& [id, _] : assets_) out.push_back(id);
  return out;
}

std::optional<std::size_t> WorldState::object_at(Cell c) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].held) continue;
    for (Cell f : objects[i].footprint) {
      if (f == c) return i;
    }
  }
  return std::nullopt;
}

bool WorldState::operator==(const WorldState& o) const {
  const bool same_asset =
      asset == o.asset || (asset && o.asset && asset->map == o.asset->map);
  return same_asset && target_class == o.target_class && objects == o.objects &&
         agent == o.agent && steps == o.steps && max_steps == o.max_steps &&
         terminal == o.terminal && rng == o.rng;
}

WorldState reset(const SceneLibrary& library, const EpisodeSpec& spec) {
  const SceneAsset& asset = library.get(spec.scene_id);
  if (spec.max_steps < 1) throw ContractViolation("max_steps must be >= 1");
  const bool has_target = std::any_of(
      asset.objects.begin(), asset.objects.end(), [&](const SceneObject& o) {
        return o.class_id == spec.target_class && o.pickupable;
      });
  if (!has_target) {
    throw ContractViolation("target_class " + std::to_string(spec.target_class) +
                            " absent from scene " + std::to_string(spec.scene_id));
  }

  WorldState s;
  s.asset = library.share(spec.scene_id);
  s.target_class = spec.target_class;
  s.objects = asset.objects;
  s.agent = spec.start_pose;
  s.agent.holding.reset();
  s.steps = 0;
  s.max_steps = spec.max_steps;
  s.terminal = false;
  s.rng.seed(spec.rng_seed);
  if (!asset.map.is_floor(s.agent.cell) || s.object_at(s.agent.cell)) {
    throw ContractViolation("start pose is not on free floor");
  }
  return s;
}

StepOutcome step(WorldState& state, Action action) {
  if (state.terminal) throw ContractViolation("step on terminal state");
  StepOutcome out;
  AgentPose& pose = state.agent;
  const Cell d = heading_delta(pose.heading);
  const Cell ahead{pose.cell.row + d.row, pose.cell.col + d.col};
  const GridMap& map = state.map();

  switch (action) {
    case Action::MoveAhead:
      if (map.is_floor(ahead) && !state.object_at(ahead)) {
        pose.cell = ahead;
      } else {
        out.collided = true;
      }
      break;
    case Action::RotateLeft:
      pose.heading = rotate_left(pose.heading);
      break;
    case Action::RotateRight:
      pose.heading = rotate_right(pose.heading);
      break;
    case Action::LookUp:
      if (pose.pitch == Pitch::Up) {
        out.invalid_action = true;
      } else {
        pose.pitch = static_cast<Pitch>(static_cast<int>(pose.pitch) + 1);
      }
      break;
    case Action::LookDown:
      if (pose.pitch == Pitch::Down) {
        out.invalid_action = true;
      } else {
        pose.pitch = static_cast<Pitch>(static_cast<int>(pose.pitch) - 1);
      }
      break;
    case Action::PickupObject: {
      out.pickup_attempted = true;
      auto idx = state.object_at(ahead);
      const bool ok = !pose.holding && idx &&
                      state.objects[*idx].pickupable &&
                      pitch_for_band(state.objects[*idx].band) == pose.pitch;
      if (!ok) {
        out.invalid_action = true;
        break;
      }
      SceneObject& obj = state.objects[*idx];
      obj.held = true;
      pose.holding = obj.instance_id;
      out.pickup_succeeded = true;
      out.picked_instance = obj.instance_id;
      out.success = obj.class_id == state.target_class;
      break;
    }
    case Action::DropObject: {
      if (!pose.holding || !map.is_floor(ahead) || state.object_at(ahead)) {
        out.invalid_action = true;
        break;
      }
      for (auto& obj : state.objects) {
        if (obj.instance_id == *pose.holding) {
          obj.held = false;
          obj.footprint = {ahead};
        }
      }
      pose.holding.reset();
      break;
    }
  }

  ++state.steps;
  out.steps_elapsed = state.steps;
  out.terminal = out.success || state.steps >= state.max_steps;
  state.terminal = out.terminal;
  return out;
}

bool in_view_cone(const AgentPose& pose, Cell c) {
  const Cell fwd = heading_delta(pose.heading);
  const Cell right{fwd.col, -fwd.row};
  const int dr = c.row - pose.cell.row;
  const int dc = c.col - pose.cell.col;
  const int depth = dr * fwd.row + dc * fwd.col;
  const int lateral = dr * right.row + dc * right.col;
  return depth >= 1 && depth <= kFovDepth && std::abs(lateral) <= depth;
}

std::vector<Cell> ray_cells(Cell from, Cell to) {
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  const int n = std::max(std::abs(dr), std::abs(dc));
  std::vector<Cell> out;
  for (int k = 1; k < n; ++k) {
    out.push_back({from.row + round_ratio(k * dr, n),
                   from.col + round_ratio(k * dc, n)});
  }
  return out;
}

std::vector<Cell> visible_cells(const WorldState& state) {
  const AgentPose& pose = state.agent;
  const GridMap& map = state.map();
  const Cell fwd = heading_delta(pose.heading);
  const Cell right{fwd.col, -fwd.row};
  std::vector<Cell> out;
  for (int depth = 1; depth <= kFovDepth; ++depth) {
    for (int lat = -depth; lat <= depth; ++lat) {
      const Cell c{pose.cell.row + depth * fwd.row + lat * right.row,
                   pose.cell.col + depth * fwd.col + lat * right.col};
      if (!map.in_bounds(c)) continue;
      bool clear = true;
      for (Cell r : ray_cells(pose.cell, c)) {
        if (!map.is_floor(r)) {
          clear = false;
          break;
        }
      }
      if (clear) out.push_back(c);
    }
  }
  return out;
}

std::vector<VisibleObject> visible_objects(const WorldState& state) {
  const std::vector<Cell> cells = visible_cells(state);
  auto seen = [&](Cell c) {
    return std::find(cells.begin(), cells.end(), c) != cells.end();
  };
  std::vector<VisibleObject> out;
  for (std::size_t i = 0; i < state.objects.size(); ++i) {
    const SceneObject& obj = state.objects[i];
    if (obj.held || pitch_for_band(obj.band) != state.agent.pitch) continue;
    if (!seen(obj.cell())) continue;
    VisibleObject v{i, {}};
    for (Cell f : obj.footprint) {
      if (seen(f)) v.footprint.push_back(f);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::optional<int> shortest_path_length(const GridMap& map, Cell from,
                                        Cell target) {
  if (!map.is_floor(from)) return std::nullopt;
  auto is_goal = [&](Cell c) {
    return std::abs(c.row - target.row) + std::abs(c.col - target.col) == 1;
  };
  std::vector<int> dist(map.cells().size(), -1);
  std::deque<Cell> queue{from};
  dist[map.index(from)] = 0;
  while (!queue.empty()) {
    const Cell cur = queue.front();
    queue.pop_front();
    if (is_goal(cur)) return dist[map.index(cur)];
    for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
      const Cell d = heading_delta(h);
      const Cell n{cur.row + d.row, cur.col + d.col};
      if (map.is_floor(n) && dist[map.index(n)] < 0) {
        dist[map.index(n)] = dist[map.index(cur)] + 1;
        queue.push_back(n);
      }
    }
  }
  return std::nullopt;
}

std::vector<Cell> free_floor_cells(const WorldState& state) {
  std::vector<Cell> out;
  const GridMap& map = state.map();
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (map.at({r, c}) == CellKind::Floor && !state.object_at({r, c})) {
        out.push_back({r, c});
      }
    }
  }
  return out;
}

std::string render_scene(const SceneAsset& asset) {
  std::vector<char> letters;
  for (const auto& [key, value] : asset.header) {
    if (key == "object" && !value.empty()) letters.push_back(value.front());
  }
  auto letter_of = [&](std::size_t i) {
    return i < letters.size() ? letters[i] : static_cast<char>('a' + i % 26);
  };

  const GridMap& map = asset.map;
  std::vector<std::string> rows(map.height(), std::string(map.width(), '.'));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (map.at({r, c}) == CellKind::Obstacle) rows[r][c] = '#';
    }
  }
  for (std::size_t i = 0; i < asset.objects.size(); ++i) {
    for (Cell cell : asset.objects[i].footprint) rows[cell.row][cell.col] = letter_of(i);
  }
  if (asset.start) {
    static constexpr char kArrow[] = {'^', '>', 'v', '<'};
    rows[asset.start->cell.row][asset.start->cell.col] =
        kArrow[static_cast<int>(asset.start->heading)];
  }

  std::ostringstream os;
  os << map.name() << " (id " << map.id() << ", " << map.width() << "x" << map.height() << ")\n";
  for (const auto& row : rows) os << row << "\n";
  for (std::size_t i = 0; i < asset.objects.size(); ++i) {
    const SceneObject& o = asset.objects[i];
    os << "  " << letter_of(i) << "  " << kClassNames[o.class_id] << "  band=" << to_string(o.band)
       << "  color=" << o.color_id << "  " << (o.pickupable ? "pickup" : "fixed") << "  at "
       << o.cell().row << "," << o.cell().col << "\n";
  }
  return os.str();
}

}  // namespace fetchrl
