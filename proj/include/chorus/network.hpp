#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "chorus/common.hpp"

namespace chorus {

enum class TopologyKind { none, grid4, ring, full, custom };

struct CommEdge {
  int from = 0, to = 0, slot = 0;
};

// Directed communication graph over agents with a fixed per-receiver slot
// layout:
//   grid4  four slots, senders in N,E,S,W order on the toroidal tile grid
//   ring   one slot, the predecessor by id
//   full   n-1 slots, senders by ascending id
//   custom slots by ascending sender id among the declared in-edges
struct CommTopology {
  TopologyKind kind = TopologyKind::none;
  int n = 0;
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::pair<int, int>> custom_edges;

  static CommTopology none(int n) { return {TopologyKind::none, n, 0, 0, {}}; }
  static CommTopology grid(int tiles_x, int tiles_y) {
    if (tiles_x < 1 || tiles_y < 1)
      throw contract_violation("grid topology needs positive tile counts");
    return {TopologyKind::grid4, tiles_x * tiles_y, tiles_x, tiles_y, {}};
  }
  static CommTopology ring(int n) {
    if (n < 2) throw contract_violation("ring topology needs >= 2 agents");
    return {TopologyKind::ring, n, 0, 0, {}};
  }
  static CommTopology full(int n) { return {TopologyKind::full, n, 0, 0, {}}; }
  static CommTopology custom(int n, std::vector<std::pair<int, int>> edges) {
    for (auto [f, t] : edges)
      if (f < 0 || f >= n || t < 0 || t >= n)
        throw contract_violation("custom topology: agent id out of range");
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return {TopologyKind::custom, n, 0, 0, std::move(edges)};
  }

  int slots(int agent) const {
    switch (kind) {
      case TopologyKind::none: return 0;
      case TopologyKind::grid4: return 4;
      case TopologyKind::ring: return 1;
      case TopologyKind::full: return n - 1;
      case TopologyKind::custom: {
        int c = 0;
        for (auto [f, t] : custom_edges) c += (t == agent);
        return c;
      }
    }
    return 0;
  }

  // in-edge senders of `agent` in slot order
  std::vector<int> in_senders(int agent) const {
    switch (kind) {
      case TopologyKind::none: return {};
      case TopologyKind::grid4: {
        const int tx = agent % tiles_x, ty = agent / tiles_x;
        auto at = [&](int x, int y) {
          x = (x % tiles_x + tiles_x) % tiles_x;
          y = (y % tiles_y + tiles_y) % tiles_y;
          return y * tiles_x + x;
        };
        return {at(tx, ty - 1), at(tx + 1, ty), at(tx, ty + 1), at(tx - 1, ty)};
      }
      case TopologyKind::ring: return {(agent + n - 1) % n};
      case TopologyKind::full: {
        std::vector<int> s;
        for (int i = 0; i < n; ++i)
          if (i != agent) s.push_back(i);
        return s;
      }
      case TopologyKind::custom: {
        std::vector<int> s;
        for (auto [f, t] : custom_edges)
          if (t == agent) s.push_back(f);
        return s;  // custom_edges is sorted, so senders come out ascending
      }
    }
    return {};
  }

  std::vector<CommEdge> edges() const {
    std::vector<CommEdge> out;
    for (int a = 0; a < n; ++a) {
      const auto senders = in_senders(a);
      for (int s = 0; s < int(senders.size()); ++s)
        out.push_back({senders[size_t(s)], a, s});
    }
    return out;
  }

  int slot_of(int from, int to) const {
    const auto senders = in_senders(to);
    for (int s = 0; s < int(senders.size()); ++s)
      if (senders[size_t(s)] == from) return s;
    return -1;
  }

  bool has_edge(int from, int to) const { return slot_of(from, to) >= 0; }

  bool operator==(const CommTopology&) const = default;
};

// One symbol per directed edge per tick.
struct MessageFrame {
  int64_t tick = 0;
  std::vector<std::tuple<int, int, int>> edges;  // from, to, symbol

  bool operator==(const MessageFrame&) const = default;
};

}  // namespace chorus
