#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "chorus/complex.hpp"
#include "chorus/persistence.hpp"
#include "chorus/rng.hpp"

using namespace chorus;

namespace {

// Brute-force homology ranks over GF(2): build the full boundary matrices
// of the alpha-sublevel complex and row-reduce them. Independent of the
// reduction used by persistence().
int gf2_rank(std::vector<std::vector<uint8_t>> m) {
  if (m.empty()) return 0;
  const size_t rows = m.size(), cols = m[0].size();
  int rank = 0;
  size_t row = 0;
  for (size_t col = 0; col < cols && row < rows; ++col) {
    size_t pivot = row;
    while (pivot < rows && !m[pivot][col]) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[row], m[pivot]);
    for (size_t r = 0; r < rows; ++r)
      if (r != row && m[r][col])
        for (size_t c = 0; c < cols; ++c) m[r][c] ^= m[row][c];
    ++row;
    ++rank;
  }
  return rank;
}

int brute_betti(const WeightedComplex& cx, double alpha, int k) {
  std::vector<std::vector<Simplex>> by_dim(size_t(cx.k_max) + 2);
  for (const auto& [s, a] : cx.appearance)
    if (a <= alpha && int(s.size()) - 1 <= cx.k_max + 1)
      by_dim[s.size() - 1].push_back(s);
  for (auto& v : by_dim) std::sort(v.begin(), v.end());

  auto boundary_rank = [&](int dim) -> int {  // rank of d_dim : C_dim -> C_{dim-1}
    if (dim <= 0 || dim >= int(by_dim.size())) return 0;
    const auto& rows_s = by_dim[size_t(dim) - 1];
    const auto& cols_s = by_dim[size_t(dim)];
    if (rows_s.empty() || cols_s.empty()) return 0;
    std::map<Simplex, size_t> row_of;
    for (size_t i = 0; i < rows_s.size(); ++i) row_of[rows_s[i]] = i;
    std::vector<std::vector<uint8_t>> m(rows_s.size(),
                                        std::vector<uint8_t>(cols_s.size(), 0));
    for (size_t j = 0; j < cols_s.size(); ++j)
      for (size_t drop = 0; drop < cols_s[j].size(); ++drop) {
        Simplex face;
        for (size_t i = 0; i < cols_s[j].size(); ++i)
          if (i != drop) face.push_back(cols_s[j][i]);
        m[row_of.at(face)][j] = 1;
      }
    return gf2_rank(std::move(m));
  };

  const int nk = k < int(by_dim.size()) ? int(by_dim[size_t(k)].size()) : 0;
  return nk - boundary_rank(k) - boundary_rank(k + 1);
}

WeightedComplex from_weights(int n, std::map<Simplex, double> w, int k_max = 3) {
  return build_complex(n, w, {}, k_max);
}

}  // namespace

TEST_CASE("all-zero weights leave isolated vertices") {
  const auto cx = from_weights(4, {{{0, 1}, 0.0}, {{1, 2}, 0.0}});
  CHECK(cx.appearance.size() == 4);  // vertices only
  const Barcode bc = persistence(cx);
  CHECK(bc.betti_at(0.0, 0) == 4);
  CHECK(coherence_index(cx, 0.0) == 3.0);
}

TEST_CASE("hollow triangle: one loop that never fills") {
  const auto cx = from_weights(
      3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 1.0}, {{0, 1, 2}, 0.0}});
  REQUIRE(cx.appearance.size() == 6);  // 3 vertices + 3 edges, no triangle
  const Barcode bc = persistence(cx);
  CHECK(bc.betti_at(-1.0, 0) == 1);
  CHECK(bc.betti_at(-1.0, 1) == 1);
  // the loop interval is open
  int open_loops = 0;
  for (const auto& iv : bc.intervals)
    if (iv.dim == 1 && std::isinf(iv.death)) ++open_loops;
  CHECK(open_loops == 1);
  CHECK(coherence_index(cx, -1.0) == 1.0);
}

TEST_CASE("filled triangle: the loop dies when the 2-simplex enters") {
  const auto cx = from_weights(
      3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 1.0}, {{0, 1, 2}, 0.5}});
  const Barcode bc = persistence(cx);
  // between -1 and -0.5 the loop is open; at -0.5 it fills
  CHECK(bc.betti_at(-0.75, 1) == 1);
  CHECK(bc.betti_at(-0.5, 1) == 0);
  CHECK(bc.betti_at(-0.5, 0) == 1);
  bool found = false;
  for (const auto& iv : bc.intervals)
    if (iv.dim == 1 && iv.birth == -1.0 && iv.death == -0.5) found = true;
  CHECK(found);
  CHECK(coherence_index(cx, -0.5) == 0.0);
}

TEST_CASE("closure repair delays a strong triple to its weakest pair") {
  const auto cx = from_weights(
      3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 1.0}, {{0, 1, 2}, 1.5}});
  CHECK(cx.appearance.at({0, 1, 2}) == -1.0);
  CHECK(cx.monotone());
}

TEST_CASE("a bare triple drags its edges in at the same scale") {
  const auto cx = from_weights(3, {{{0, 1, 2}, 2.0}});
  CHECK(cx.appearance.at({0, 1}) == -2.0);
  CHECK(cx.appearance.at({1, 2}) == -2.0);
  CHECK(cx.appearance.at({0, 2}) == -2.0);
  CHECK(cx.downward_closed());
  const Barcode bc = persistence(cx);
  CHECK(bc.betti_at(-2.0, 0) == 1);
  CHECK(bc.betti_at(-2.0, 1) == 0);  // born filled
}

TEST_CASE("two disjoint edges leave two components") {
  const auto cx = from_weights(4, {{{0, 1}, 1.0}, {{2, 3}, 1.0}});
  const Barcode bc = persistence(cx);
  CHECK(bc.betti_at(-1.0, 0) == 2);
  CHECK(coherence_index(cx, -1.0) == 1.0);
}

TEST_CASE("tetrahedron boundary is a 2-sphere") {
  std::map<Simplex, double> w;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) w[{a, b}] = 1.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (int c = b + 1; c < 4; ++c) w[{a, b, c}] = 1.0;
  const auto cx = from_weights(4, w);
  const Barcode bc = persistence(cx);
  CHECK(bc.betti_at(-1.0, 0) == 1);
  CHECK(bc.betti_at(-1.0, 1) == 0);
  CHECK(bc.betti_at(-1.0, 2) == 1);
  CHECK(coherence_index(cx, -1.0) == 1.0);
}

TEST_CASE("coned complex is contractible") {
  // cone over a square loop: apex 4 joined to every edge
  std::map<Simplex, double> w;
  const std::vector<std::pair<int, int>> sq{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  for (auto [a, b] : sq) {
    w[{a, b}] = 1.0;
    Simplex t{a, b, 4};
    std::sort(t.begin(), t.end());
    w[t] = 1.0;
  }
  const auto cx = from_weights(5, w);
  const Barcode bc = persistence(cx);
  CHECK(bc.betti_at(-1.0, 0) == 1);
  CHECK(bc.betti_at(-1.0, 1) == 0);
  CHECK(bc.betti_at(-1.0, 2) == 0);
  CHECK(coherence_index(cx, -1.0) == 0.0);
}

TEST_CASE("empty complex has zero coherence") {
  const auto cx = from_weights(0, {});
  CHECK(coherence_index(cx, 0.0) == 0.0);
}

TEST_CASE("persistence rejects broken filtrations") {
  WeightedComplex cx;
  cx.n_vertices = 2;
  cx.appearance[{0}] = 0.0;
  cx.appearance[{1}] = 0.0;
  cx.appearance[{0, 1}] = -1.0;  // edge before its vertices
  CHECK_THROWS_AS(persistence(cx), contract_violation);
  WeightedComplex open_cx;
  open_cx.n_vertices = 3;
  open_cx.appearance[{0}] = 0.0;
  open_cx.appearance[{0, 1}] = 0.0;  // vertex 1 missing
  CHECK_THROWS_AS(persistence(open_cx), contract_violation);
}

TEST_CASE("barcode matches brute-force ranks on random complexes") {
  for (uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed, 0xc0de);
    const int n = 4 + int(rng.below(4));
    std::map<Simplex, double> w;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng.uniform() < 0.5) w[{a, b}] = 0.25 + rng.uniform();
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          if (rng.uniform() < 0.25) w[{a, b, c}] = 0.25 + rng.uniform();
    const auto cx = from_weights(n, w);
    REQUIRE(cx.downward_closed());
    REQUIRE(cx.monotone());
    const Barcode bc = persistence(cx);

    // probe at every appearance value and just after
    std::set<double> alphas;
    for (const auto& [_, a] : cx.appearance)
      if (std::isfinite(a)) {
        alphas.insert(a);
        alphas.insert(a + 1e-6);
      }
    alphas.insert(0.0);
    for (double alpha : alphas)
      for (int k = 0; k <= 2; ++k)
        REQUIRE(bc.betti_at(alpha, k) == brute_betti(cx, alpha, k));
  }
}

TEST_CASE("euler characteristic agrees with alternating betti sums") {
  for (uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed, 0xe0e0);
    const int n = 5;
    std::map<Simplex, double> w;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng.uniform() < 0.6) w[{a, b}] = 0.5 + rng.uniform();
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          if (rng.uniform() < 0.3) w[{a, b, c}] = 0.5 + rng.uniform();
    const auto cx = from_weights(n, w);
    const Barcode bc = persistence(cx);
    for (double alpha : {-1.6, -1.1, -0.6, -0.1}) {
      int chi_count = 0;
      for (const auto& [s, a] : cx.appearance)
        if (a <= alpha) chi_count += (s.size() % 2) ? 1 : -1;
      int chi_betti = 0;
      for (int k = 0; k <= 3; ++k)
        chi_betti += (k % 2 ? -1 : 1) * bc.betti_at(alpha, k);
      REQUIRE(chi_count == chi_betti);
    }
  }
}

TEST_CASE("barcodes are invariant under vertex relabeling") {
  Rng rng(77, 0xf00d);
  const int n = 6;
  std::map<Simplex, double> w;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (rng.uniform() < 0.5) w[{a, b}] = 0.5 + rng.uniform();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (rng.uniform() < 0.3) w[{a, b, c}] = 0.5 + rng.uniform();

  const std::vector<int> perm{3, 5, 0, 2, 4, 1};
  std::map<Simplex, double> wp;
  for (const auto& [s, weight] : w) {
    Simplex t;
    for (int v : s) t.push_back(perm[size_t(v)]);
    std::sort(t.begin(), t.end());
    wp[t] = weight;
  }
  auto sorted_intervals = [](const Barcode& bc) {
    std::vector<std::tuple<int, double, double>> v;
    for (const auto& iv : bc.intervals) v.emplace_back(iv.dim, iv.birth, iv.death);
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted_intervals(persistence(from_weights(n, w))) ==
        sorted_intervals(persistence(from_weights(n, wp))));
}

TEST_CASE("gamma matrix fills in edges where synergy is silent") {
  std::vector<std::vector<double>> gamma(3, std::vector<double>(3, 0.0));
  gamma[0][1] = 0.8;
  gamma[2][1] = 0.3;
  const auto cx = build_complex(3, {{{0, 2}, 0.6}}, gamma, 3);
  CHECK(cx.appearance.at({0, 1}) == -0.8);  // symmetrized channel weight
  CHECK(cx.appearance.at({1, 2}) == -0.3);
  CHECK(cx.appearance.at({0, 2}) == -0.6);  // synergy wins where defined
}

TEST_CASE("barcode TSV uses inf for open intervals") {
  const auto cx = from_weights(2, {{{0, 1}, 1.0}});
  std::ostringstream os;
  write_barcode_tsv(os, persistence(cx));
  const std::string text = os.str();
  CHECK(text.rfind("dim\tbirth\tdeath\n", 0) == 0);
  CHECK(text.find("-inf") != std::string::npos);
  CHECK(text.find("\tinf") != std::string::npos);
}
