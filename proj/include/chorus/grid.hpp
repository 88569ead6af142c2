#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "chorus/common.hpp"

namespace chorus {

// Toroidal binary grid, row-major storage.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> cells;
  int64_t tick = 0;

  Grid() = default;
  Grid(int w, int h) : width(w), height(h), cells(size_t(w) * size_t(h), 0) {
    if (w <= 0 || h <= 0) throw contract_violation("grid extents must be positive");
  }

  size_t idx(int x, int y) const { return size_t(y) * width + x; }
  uint8_t at(int x, int y) const { return cells[idx(x, y)]; }
  uint8_t& at(int x, int y) { return cells[idx(x, y)]; }

  int wrap_x(int x) const {
    x %= width;
    return x < 0 ? x + width : x;
  }
  int wrap_y(int y) const {
    y %= height;
    return y < 0 ? y + height : y;
  }
  uint8_t at_wrapped(int x, int y) const { return at(wrap_x(x), wrap_y(y)); }

  int population() const {
    int n = 0;
    for (uint8_t c : cells) n += c;
    return n;
  }

  bool operator==(const Grid&) const = default;
};

// Moore ring in row-major order: NW N NE W E SW S SE, toroidal wrap.
struct Neighborhood {
  uint8_t center = 0;
  std::vector<uint8_t> ring;
};

inline Neighborhood neighborhood(const Grid& g, int x, int y) {
  if (x < 0 || x >= g.width || y < 0 || y >= g.height)
    throw contract_violation("neighborhood: coordinates out of range");
  Neighborhood n;
  n.center = g.at(x, y);
  n.ring.reserve(8);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      n.ring.push_back(g.at_wrapped(x + dx, y + dy));
    }
  return n;
}

// One synchronous B3/S23 step. The input grid is left untouched.
inline Grid step_life(const Grid& g) {
  Grid out(g.width, g.height);
  out.tick = g.tick + 1;
  for (int y = 0; y < g.height; ++y) {
    const int yu = (y == 0 ? g.height - 1 : y - 1);
    const int yd = (y == g.height - 1 ? 0 : y + 1);
    for (int x = 0; x < g.width; ++x) {
      const int xl = (x == 0 ? g.width - 1 : x - 1);
      const int xr = (x == g.width - 1 ? 0 : x + 1);
      const int live = g.at(xl, yu) + g.at(x, yu) + g.at(xr, yu) +
                       g.at(xl, y) + g.at(xr, y) +
                       g.at(xl, yd) + g.at(x, yd) + g.at(xr, yd);
      out.at(x, y) = (live == 3 || (live == 2 && g.at(x, y))) ? 1 : 0;
    }
  }
  return out;
}

// Wolfram numbering: table[(l<<2)|(c<<1)|r] is bit k of the rule number,
// so pattern 111 reads bit 7 and 000 reads bit 0.
struct ElementaryRule {
  int number = 0;
  std::array<uint8_t, 8> table{};

  static ElementaryRule from_number(int n) {
    if (n < 0 || n > 255)
      throw contract_violation("elementary rule must be in 0..255");
    ElementaryRule r;
    r.number = n;
    for (int k = 0; k < 8; ++k) r.table[k] = uint8_t((n >> k) & 1);
    return r;
  }
};

inline std::vector<uint8_t> step_elementary(const std::vector<uint8_t>& row,
                                            const ElementaryRule& rule) {
  if (row.size() < 3)
    throw contract_violation("step_elementary: row length must be >= 3");
  const size_t n = row.size();
  std::vector<uint8_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    const uint8_t l = row[(i + n - 1) % n];
    const uint8_t c = row[i];
    const uint8_t r = row[(i + 1) % n];
    out[i] = rule.table[(l << 2) | (c << 1) | r];
  }
  return out;
}

}  // namespace chorus
