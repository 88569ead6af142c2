#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <utility>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/grid.hpp"

namespace chorus {

// A connected blob whose cell set recurs under translation.
struct TrackedStructure {
  int id = 0;
  std::vector<std::pair<int, int>> cell_set;  // at first detection
  int period = 1;
  int dx = 0, dy = 0;  // displacement per period
  int64_t first_seen = 0;
  int64_t last_seen = 0;
};

namespace detail {

struct Component {
  // cell set normalized to its bounding-box origin, sorted; the canonical
  // form compared across ticks
  std::vector<std::pair<int, int>> canonical;
  int anchor_x = 0, anchor_y = 0;  // wrapped bounding-box origin
  std::vector<std::pair<int, int>> cells;  // wrapped absolute coordinates
};

// 8-connected components with torus unwrap: BFS assigns each cell an
// unwrapped coordinate relative to its seed so blobs crossing the seam
// normalize cleanly. Blobs that span a full torus dimension are not given
// a traversal-independent form; periodic matching simply fails for them.
inline std::vector<Component> components(const Grid& g) {
  std::vector<uint8_t> seen(g.cells.size(), 0);
  std::vector<Component> out;
  for (int sy = 0; sy < g.height; ++sy) {
    for (int sx = 0; sx < g.width; ++sx) {
      if (!g.at(sx, sy) || seen[g.idx(sx, sy)]) continue;
      std::vector<std::pair<int, int>> unwrapped;
      std::deque<std::pair<int, int>> frontier;  // unwrapped coords
      frontier.emplace_back(sx, sy);
      seen[g.idx(sx, sy)] = 1;
      while (!frontier.empty()) {
        auto [ux, uy] = frontier.front();
        frontier.pop_front();
        unwrapped.emplace_back(ux, uy);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = ux + dx, ny = uy + dy;
            const int wx = g.wrap_x(nx), wy = g.wrap_y(ny);
            if (!g.at(wx, wy) || seen[g.idx(wx, wy)]) continue;
            seen[g.idx(wx, wy)] = 1;
            frontier.emplace_back(nx, ny);
          }
      }
      int minx = unwrapped[0].first, miny = unwrapped[0].second;
      for (auto [x, y] : unwrapped) {
        minx = std::min(minx, x);
        miny = std::min(miny, y);
      }
      Component c;
      c.anchor_x = g.wrap_x(minx);
      c.anchor_y = g.wrap_y(miny);
      for (auto [x, y] : unwrapped) {
        c.canonical.emplace_back(x - minx, y - miny);
        c.cells.emplace_back(g.wrap_x(x), g.wrap_y(y));
      }
      std::sort(c.canonical.begin(), c.canonical.end());
      std::sort(c.cells.begin(), c.cells.end());
      out.push_back(std::move(c));
    }
  }
  return out;
}

// shortest signed translation on the torus
inline int wrap_delta(int d, int extent) {
  d %= extent;
  if (d < 0) d += extent;
  if (d > extent / 2) d -= extent;
  return d;
}

}  // namespace detail

// Finds components of history.front() whose canonical form recurs under a
// fixed translation every p ticks, p <= max_period, with at least two full
// periods observed. Components that collide or deform simply go unreported.
inline std::vector<TrackedStructure> detect_structures(
    const std::vector<Grid>& history, int max_period) {
  if (max_period < 1) throw contract_violation("max_period must be >= 1");
  if (int(history.size()) < 2 * max_period)
    throw contract_violation("detect_structures: history must hold >= 2*max_period states");

  std::vector<std::vector<detail::Component>> comps(history.size());
  for (size_t t = 0; t < history.size(); ++t)
    comps[t] = detail::components(history[t]);

  const Grid& g0 = history.front();
  std::vector<TrackedStructure> out;
  int next_id = 0;
  for (const auto& c0 : comps[0]) {
    for (int p = 1; p <= max_period; ++p) {
      const int max_k = int(history.size() - 1) / p;
      if (max_k < 2) break;
      // candidate displacement from the first recurrence
      const detail::Component* rec = nullptr;
      for (const auto& c : comps[p])
        if (c.canonical == c0.canonical) {
          rec = &c;
          break;
        }
      if (!rec) continue;
      const int dx = detail::wrap_delta(rec->anchor_x - c0.anchor_x, g0.width);
      const int dy = detail::wrap_delta(rec->anchor_y - c0.anchor_y, g0.height);
      bool ok = true;
      for (int k = 1; k <= max_k && ok; ++k) {
        const int ex = g0.wrap_x(c0.anchor_x + k * dx);
        const int ey = g0.wrap_y(c0.anchor_y + k * dy);
        ok = false;
        for (const auto& c : comps[size_t(k) * p])
          if (c.anchor_x == ex && c.anchor_y == ey &&
              c.canonical == c0.canonical) {
            ok = true;
            break;
          }
      }
      if (!ok) continue;
      TrackedStructure s;
      s.id = next_id++;
      s.cell_set = c0.cells;
      s.period = p;
      s.dx = dx;
      s.dy = dy;
      s.first_seen = history.front().tick;
      s.last_seen = history[size_t(max_k) * p].tick;
      out.push_back(std::move(s));
      break;  // smallest period wins
    }
  }
  return out;
}

}  // namespace chorus
