#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/grid.hpp"

namespace chorus {

// A pattern is a set of live-cell coordinates plus declared extents.
struct Pattern {
  int width = 0;
  int height = 0;
  std::vector<std::pair<int, int>> cells;  // (x, y), sorted row-major

  bool operator==(const Pattern&) const = default;
};

namespace detail {

inline void sort_cells(std::vector<std::pair<int, int>>& cells) {
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second < b.second
                                          : a.first < b.first;
            });
}

}  // namespace detail

// Run-length-encoded pattern text:
//   optional leading '#' comment lines
//   header  x = <w>, y = <h>[, rule = B3/S23]
//   body    <count?>b | <count?>o | <count?>$ | !   (absent count = 1)
// Anything after '!' is ignored.
inline Pattern parse_rle(std::string_view text, const std::string& = "") {
  size_t pos = 0;
  int line = 1, col = 1;

  auto peek = [&]() -> int { return pos < text.size() ? text[pos] : -1; };
  auto advance = [&]() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  };
  auto fail = [&](const std::string& msg) -> void {
    throw parse_error(msg, line, col);
  };

  // comments
  while (pos < text.size()) {
    if (peek() == '#') {
      while (pos < text.size() && peek() != '\n') advance();
      if (pos < text.size()) advance();
    } else if (peek() == '\n' || peek() == '\r' || peek() == ' ' ||
               peek() == '\t') {
      advance();
    } else {
      break;
    }
  }

  // header line
  size_t eol = text.find('\n', pos);
  std::string header(text.substr(pos, eol == std::string_view::npos
                                          ? std::string_view::npos
                                          : eol - pos));
  const int header_line = line;
  auto header_fail = [&](const std::string& msg) -> void {
    throw parse_error(msg, header_line, 1);
  };

  Pattern pat;
  {
    // x = <int>, y = <int>[, rule = <str>]
    std::string h = header;
    h.erase(std::remove_if(h.begin(), h.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            h.end());
    auto take = [&](std::string_view key, std::string& rest,
                    std::string& out) -> bool {
      if (rest.substr(0, key.size()) != key) return false;
      rest.erase(0, key.size());
      size_t comma = rest.find(',');
      out = rest.substr(0, comma);
      rest.erase(0, comma == std::string::npos ? rest.size() : comma + 1);
      return true;
    };
    std::string rest = h, val;
    if (!take("x=", rest, val)) header_fail("malformed header: expected x = <w>");
    auto parse_int = [&](const std::string& s, int& out) {
      auto res = std::from_chars(s.data(), s.data() + s.size(), out);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size() || out < 0)
        header_fail("malformed header: bad extent '" + s + "'");
    };
    parse_int(val, pat.width);
    if (!take("y=", rest, val)) header_fail("malformed header: expected y = <h>");
    parse_int(val, pat.height);
    if (!rest.empty()) {
      if (!take("rule=", rest, val) || !rest.empty())
        header_fail("malformed header: unexpected trailing fields");
      std::string low = val;
      std::transform(low.begin(), low.end(), low.begin(),
                     [](unsigned char c) { return char(std::tolower(c)); });
      if (low != "b3/s23") header_fail("unsupported rule '" + val + "'");
    }
  }
  if (eol == std::string_view::npos) {
    pos = text.size();
  } else {
    while (pos <= eol) advance();
  }

  // body
  int x = 0, y = 0;
  long run = -1;  // -1 = no explicit count
  bool ended = false;
  constexpr long kMaxRun = 1 << 24;
  while (pos < text.size() && !ended) {
    const int c = peek();
    if (c == '\n' || c == '\r' || c == ' ' || c == '\t') {
      advance();
      continue;
    }
    if (std::isdigit(c)) {
      if (run < 0) run = 0;
      run = run * 10 + (c - '0');
      if (run > kMaxRun) fail("run count overflow");
      advance();
      continue;
    }
    const long n = run < 0 ? 1 : run;
    switch (c) {
      case 'b':
      case 'o': {
        if (n == 0) fail("zero run count");
        if (y >= pat.height) fail("rows exceed declared height");
        if (x + n > pat.width) fail("run exceeds declared width");
        if (c == 'o')
          for (long k = 0; k < n; ++k) pat.cells.emplace_back(int(x + k), y);
        x += int(n);
        break;
      }
      case '$': {
        if (n == 0) fail("zero run count");
        y += int(n);
        x = 0;
        if (y > pat.height) fail("rows exceed declared height");
        break;
      }
      case '!':
        ended = true;
        break;
      default:
        fail(std::string("unexpected character '") + char(c) + "'");
    }
    run = -1;
    advance();
  }
  if (!ended) fail("missing '!' terminator");

  detail::sort_cells(pat.cells);
  return pat;
}

// Canonical emitter; inverse of parse_rle on canonical text. Lines are
// wrapped at 70 characters.
inline std::string emit_rle(const Pattern& pat) {
  std::string out = "x = " + format_int(pat.width) + ", y = " +
                    format_int(pat.height) + ", rule = B3/S23\n";
  std::string body;
  std::string linebuf;
  auto flush_token = [&](const std::string& tok) {
    if (linebuf.size() + tok.size() > 70) {
      body += linebuf;
      body += '\n';
      linebuf.clear();
    }
    linebuf += tok;
  };
  auto run_token = [&](long n, char tag) {
    if (n <= 0) return;
    flush_token(n == 1 ? std::string(1, tag)
                       : format_int(n) + std::string(1, tag));
  };

  auto cells = pat.cells;
  detail::sort_cells(cells);
  int row = 0;
  size_t i = 0;
  long pending_rows = 0;
  while (i < cells.size()) {
    const int y = cells[i].second;
    pending_rows += y - row;
    row = y;
    run_token(pending_rows, '$');
    pending_rows = 0;
    int x = 0;
    while (i < cells.size() && cells[i].second == y) {
      const int cx = cells[i].first;
      run_token(cx - x, 'b');
      long live = 0;
      while (i < cells.size() && cells[i].second == y &&
             cells[i].first == cx + live) {
        ++live;
        ++i;
      }
      run_token(live, 'o');
      x = int(cx + live);
    }
    row = y + 1;
    pending_rows = 1;  // row terminator, merged with any blank rows
  }
  flush_token("!");
  body += linebuf;
  body += '\n';
  return out + body;
}

// Stamp a pattern onto a grid at (ox, oy), toroidal.
inline void stamp(Grid& g, const Pattern& pat, int ox, int oy) {
  for (auto [x, y] : pat.cells) g.at(g.wrap_x(ox + x), g.wrap_y(oy + y)) = 1;
}

inline Grid pattern_to_grid(const Pattern& pat, int width, int height,
                            int ox = 0, int oy = 0) {
  Grid g(width, height);
  stamp(g, pat, ox, oy);
  return g;
}

// One row per line, '.' = dead, 'O' = alive, trailing newline.
inline std::string render_plaintext(const Grid& g) {
  std::string out;
  out.reserve(size_t(g.height) * (g.width + 1));
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) out += g.at(x, y) ? 'O' : '.';
    out += '\n';
  }
  return out;
}

inline Pattern grid_to_pattern(const Grid& g) {
  Pattern p;
  p.width = g.width;
  p.height = g.height;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (g.at(x, y)) p.cells.emplace_back(x, y);
  return p;
}

}  // namespace chorus
