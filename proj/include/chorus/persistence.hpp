#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/complex.hpp"

namespace chorus {

struct Interval {
  int dim = 0;
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();  // open when inf

  bool operator==(const Interval&) const = default;
};

struct Barcode {
  std::vector<Interval> intervals;

  // rank of k-th homology at scale alpha; intervals are [birth, death)
  int betti_at(double alpha, int k) const {
    int n = 0;
    for (const auto& iv : intervals)
      n += (iv.dim == k && iv.birth <= alpha && alpha < iv.death);
    return n;
  }
};

// Standard boundary-matrix column reduction over GF(2). Columns are
// ordered by (appearance, dimension, vertex list); monotonicity puts every
// face before its cofacets.
inline Barcode persistence(const WeightedComplex& cx) {
  if (!cx.downward_closed() || !cx.monotone())
    throw contract_violation("persistence: invalid filtration");

  struct Cell {
    Simplex s;
    double a;
  };
  std::vector<Cell> cells;
  cells.reserve(cx.appearance.size());
  for (const auto& [s, a] : cx.appearance) cells.push_back({s, a});
  std::sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) {
    if (x.a != y.a) return x.a < y.a;
    if (x.s.size() != y.s.size()) return x.s.size() < y.s.size();
    return x.s < y.s;
  });

  std::map<Simplex, int> index;
  for (int i = 0; i < int(cells.size()); ++i) index[cells[size_t(i)].s] = i;

  // columns as sorted row-index lists
  std::vector<std::vector<int>> cols(cells.size());
  for (size_t j = 0; j < cells.size(); ++j) {
    const Simplex& s = cells[j].s;
    if (s.size() < 2) continue;
    for (size_t drop = 0; drop < s.size(); ++drop) {
      Simplex face;
      for (size_t i = 0; i < s.size(); ++i)
        if (i != drop) face.push_back(s[i]);
      cols[j].push_back(index.at(face));
    }
    std::sort(cols[j].begin(), cols[j].end());
  }

  auto add_into = [](std::vector<int>& dst, const std::vector<int>& src) {
    std::vector<int> out;
    out.reserve(dst.size() + src.size());
    std::set_symmetric_difference(dst.begin(), dst.end(), src.begin(),
                                  src.end(), std::back_inserter(out));
    dst = std::move(out);
  };

  std::vector<int> pivot_owner(cells.size(), -1);
  std::vector<int> killed_by(cells.size(), -1);
  for (int j = 0; j < int(cells.size()); ++j) {
    auto& col = cols[size_t(j)];
    while (!col.empty() && pivot_owner[size_t(col.back())] >= 0)
      add_into(col, cols[size_t(pivot_owner[size_t(col.back())])]);
    if (!col.empty()) {
      pivot_owner[size_t(col.back())] = j;
      killed_by[size_t(col.back())] = j;
    }
  }

  Barcode bc;
  for (int i = 0; i < int(cells.size()); ++i) {
    const bool is_creator = cols[size_t(i)].empty();
    if (!is_creator) continue;
    Interval iv;
    iv.dim = int(cells[size_t(i)].s.size()) - 1;
    iv.birth = cells[size_t(i)].a;
    if (killed_by[size_t(i)] >= 0)
      iv.death = cells[size_t(killed_by[size_t(i)])].a;
    bc.intervals.push_back(iv);
  }
  return bc;
}

inline int betti(const WeightedComplex& cx, double alpha, int k) {
  return persistence(cx).betti_at(alpha, k);
}

// (b0 - 1) + sum of higher Betti numbers at the scale, floored at zero for
// the empty complex. Lower means better integrated.
inline double coherence_index(const WeightedComplex& cx, double alpha) {
  const Barcode bc = persistence(cx);
  double c = std::max(0, bc.betti_at(alpha, 0) - 1);
  for (int k = 1; k <= cx.k_max; ++k) c += bc.betti_at(alpha, k);
  return c;
}

// TSV export: dim, birth, death with "inf" for open intervals.
inline void write_barcode_tsv(std::ostream& os, const Barcode& bc) {
  os << "dim\tbirth\tdeath\n";
  for (const auto& iv : bc.intervals) {
    os << iv.dim << '\t';
    os << (std::isinf(iv.birth) ? std::string(iv.birth < 0 ? "-inf" : "inf")
                                : format_double(iv.birth));
    os << '\t';
    os << (std::isinf(iv.death) ? std::string("inf") : format_double(iv.death));
    os << '\n';
  }
}

}  // namespace chorus
