#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "chorus/common.hpp"

namespace chorus {

using Simplex = std::vector<int>;  // sorted vertex ids

// Filtered simplicial complex. appearance[s] is the filtration scale at
// which s enters; vertices sit at -inf. Scales are negated synergy
// weights, so stronger subsets enter earlier and the complex grows as the
// synergy threshold drops.
struct WeightedComplex {
  int n_vertices = 0;
  int k_max = 3;
  std::map<Simplex, double> appearance;

  bool contains(const Simplex& s) const { return appearance.count(s) > 0; }

  bool downward_closed() const {
    for (const auto& [s, _] : appearance) {
      if (s.size() < 2) continue;
      for (size_t drop = 0; drop < s.size(); ++drop) {
        Simplex face;
        for (size_t i = 0; i < s.size(); ++i)
          if (i != drop) face.push_back(s[i]);
        if (!contains(face)) return false;
      }
    }
    return true;
  }

  bool monotone() const {
    for (const auto& [s, a] : appearance) {
      if (s.size() < 2) continue;
      for (size_t drop = 0; drop < s.size(); ++drop) {
        Simplex face;
        for (size_t i = 0; i < s.size(); ++i)
          if (i != drop) face.push_back(s[i]);
        auto it = appearance.find(face);
        if (it != appearance.end() && it->second > a) return false;
      }
    }
    return true;
  }
};

// Builds the complex from synergy weights (subsets of size >= 2) and an
// optional pairwise channel-MI matrix. A subset enters iff its weight is
// positive; edges take the stronger of their synergy weight and the
// symmetrized gamma. Missing faces are inserted at the cofacet's scale and
// cofacets are then delayed to max(own scale, faces), which restores a
// valid filtration.
inline WeightedComplex build_complex(
    int n_vertices, const std::map<Simplex, double>& synergy,
    const std::vector<std::vector<double>>& gamma, int k_max) {
  WeightedComplex cx;
  cx.n_vertices = n_vertices;
  cx.k_max = k_max;
  const double inf = std::numeric_limits<double>::infinity();
  for (int v = 0; v < n_vertices; ++v) cx.appearance[{v}] = -inf;

  auto weight_of = [&](const Simplex& s) -> double {
    double w = 0.0;
    if (auto it = synergy.find(s); it != synergy.end()) w = it->second;
    if (s.size() == 2 && !gamma.empty()) {
      const double g = std::max(gamma[size_t(s[0])][size_t(s[1])],
                                gamma[size_t(s[1])][size_t(s[0])]);
      w = std::max(w, g);
    }
    return w;
  };

  std::map<Simplex, double> raw;
  for (const auto& [s, _] : synergy) {
    if (int(s.size()) < 2 || int(s.size()) > k_max + 1) continue;
    Simplex key = s;
    std::sort(key.begin(), key.end());
    for (int v : key)
      if (v < 0 || v >= n_vertices)
        throw contract_violation("build_complex: vertex out of range");
    const double w = weight_of(key);
    if (w > 0.0) raw[key] = -w;
  }
  if (!gamma.empty()) {
    for (int i = 0; i < n_vertices; ++i)
      for (int j = i + 1; j < n_vertices; ++j) {
        const Simplex e{i, j};
        if (raw.count(e)) continue;
        const double w = weight_of(e);
        if (w > 0.0) raw[e] = -w;
      }
  }

  std::vector<std::pair<Simplex, double>> by_dim(raw.begin(), raw.end());
  std::sort(by_dim.begin(), by_dim.end(),
            [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  for (auto& [s, a] : by_dim) {
    if (!cx.appearance.count(s)) cx.appearance[s] = a;
    else cx.appearance[s] = std::min(cx.appearance[s], a);
  }
  // propagate downward closure
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::pair<Simplex, double>> to_add;
    for (const auto& [s, a] : cx.appearance) {
      if (s.size() < 2) continue;
      for (size_t drop = 0; drop < s.size(); ++drop) {
        Simplex face;
        for (size_t i = 0; i < s.size(); ++i)
          if (i != drop) face.push_back(s[i]);
        if (!cx.contains(face)) to_add.emplace_back(face, a);
      }
    }
    for (auto& [s, a] : to_add) {
      auto [it, inserted] = cx.appearance.try_emplace(s, a);
      if (!inserted) it->second = std::min(it->second, a);
      grew |= inserted;
    }
  }
  // delay cofacets below their faces
  std::vector<Simplex> order;
  for (const auto& [s, _] : cx.appearance) order.push_back(s);
  std::sort(order.begin(), order.end(), [](const Simplex& a, const Simplex& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  for (const auto& s : order) {
    if (s.size() < 2) continue;
    double& a = cx.appearance[s];
    for (size_t drop = 0; drop < s.size(); ++drop) {
      Simplex face;
      for (size_t i = 0; i < s.size(); ++i)
        if (i != drop) face.push_back(s[i]);
      a = std::max(a, cx.appearance[face]);
    }
  }
  return cx;
}

}  // namespace chorus
