#pragma once

// Reference implementations written independently of the library code, used
// as test oracles.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "fetchrl/scene.hpp"

namespace fetchrl::oracle {

// Ego coordinates written out per heading rather than through a rotation.
inline std::pair<int, int> depth_lateral(const AgentPose& pose, Cell c) {
  const int dr = c.row - pose.cell.row;
  const int dc = c.col - pose.cell.col;
  switch (pose.heading) {
    case Heading::N: return {-dr, dc};
    case Heading::E: return {dc, dr};
    case Heading::S: return {dr, -dc};
    case Heading::W: return {-dc, -dr};
  }
  return {0, 0};
}

inline bool oracle_in_cone(const AgentPose& pose, Cell c) {
  auto [depth, lateral] = depth_lateral(pose, c);
  return depth >= 1 && depth <= 5 && std::abs(lateral) <= depth;
}

inline std::vector<Cell> oracle_ray(Cell from, Cell to) {
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  const int n = std::max(std::abs(dr), std::abs(dc));
  std::vector<Cell> out;
  for (int k = 1; k < n; ++k) {
    // std::lround rounds halves away from zero.
    out.push_back({from.row + static_cast<int>(std::lround(double(k) * dr / n)),
                   from.col + static_cast<int>(std::lround(double(k) * dc / n))});
  }
  return out;
}

inline std::set<Cell> oracle_visible(const GridMap& map, const AgentPose& pose) {
  std::set<Cell> out;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!oracle_in_cone(pose, {r, c})) continue;
      bool clear = true;
      for (Cell x : oracle_ray(pose.cell, {r, c})) clear = clear && map.is_floor(x);
      if (clear) out.insert({r, c});
    }
  }
  return out;
}


// Unit-weight Dijkstra over Floor cells to any Floor cell 4-adjacent to `target`.
inline std::optional<int> dijkstra_to_neighbour(const GridMap& map, Cell from, Cell target) {
  if (!map.is_floor(from)) return std::nullopt;
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> dist(map.cells().size(), inf);
  using Item = std::pair<int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[map.index(from)] = 0;
  pq.push({0, map.index(from)});
  while (!pq.empty()) {
    auto [d, i] = pq.top();
    pq.pop();
    if (d > dist[i]) continue;
    const Cell c{i / map.width(), i % map.width()};
    const Cell nbrs[] = {{c.row - 1, c.col}, {c.row + 1, c.col}, {c.row, c.col - 1}, {c.row, c.col + 1}};
    for (Cell n : nbrs) {
      if (!map.is_floor(n)) continue;
      if (d + 1 < dist[map.index(n)]) {
        dist[map.index(n)] = d + 1;
        pq.push({d + 1, map.index(n)});
      }
    }
  }
  int best = inf;
  const Cell goals[] = {{target.row - 1, target.col}, {target.row + 1, target.col},
                        {target.row, target.col - 1}, {target.row, target.col + 1}};
  for (Cell g : goals) {
    if (map.is_floor(g)) best = std::min(best, dist[map.index(g)]);
  }
  if (best == inf) return std::nullopt;
  return best;
}

}  // namespace fetchrl::oracle
