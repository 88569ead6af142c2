#include <catch2/catch_amalgamated.hpp>

#include "chorus/rle.hpp"
#include "chorus/structures.hpp"

using namespace chorus;

namespace {

std::vector<Grid> evolve(Grid g, int steps) {
  std::vector<Grid> hist{g};
  for (int i = 0; i < steps; ++i) hist.push_back(step_life(hist.back()));
  return hist;
}

Grid glider_world(int w = 32, int h = 32) {
  const Pattern glider = parse_rle("x = 3, y = 3, rule = B3/S23\nbob$2bo$3o!");
  return pattern_to_grid(glider, w, h, 4, 4);
}

}  // namespace

TEST_CASE("glider: period 4, displacement (1,1)") {
  const auto hist = evolve(glider_world(), 32);
  const auto found = detect_structures(hist, 16);
  REQUIRE(found.size() == 1);
  CHECK(found[0].period == 4);
  CHECK(found[0].dx == 1);
  CHECK(found[0].dy == 1);
  CHECK(found[0].cell_set.size() == 5);
  CHECK(found[0].first_seen == 0);
}

TEST_CASE("blinker: period 2, static") {
  Grid g(16, 16);
  g.at(5, 4) = g.at(5, 5) = g.at(5, 6) = 1;
  const auto found = detect_structures(evolve(g, 32), 16);
  REQUIRE(found.size() == 1);
  CHECK(found[0].period == 2);
  CHECK(found[0].dx == 0);
  CHECK(found[0].dy == 0);
}

TEST_CASE("block: period 1, still") {
  Grid g(12, 12);
  g.at(2, 2) = g.at(3, 2) = g.at(2, 3) = g.at(3, 3) = 1;
  const auto found = detect_structures(evolve(g, 32), 16);
  REQUIRE(found.size() == 1);
  CHECK(found[0].period == 1);
  CHECK(found[0].dx == 0);
  CHECK(found[0].dy == 0);
}

TEST_CASE("several coexisting structures are tracked separately") {
  Grid g = glider_world(48, 48);
  g.at(30, 30) = g.at(31, 30) = g.at(30, 31) = g.at(31, 31) = 1;  // block
  g.at(40, 10) = g.at(40, 11) = g.at(40, 12) = 1;                 // blinker
  const auto found = detect_structures(evolve(g, 32), 16);
  REQUIRE(found.size() == 3);
  std::vector<int> periods;
  for (const auto& s : found) periods.push_back(s.period);
  std::sort(periods.begin(), periods.end());
  CHECK(periods == std::vector<int>{1, 2, 4});
}

TEST_CASE("colliding debris is not reported as periodic") {
  // r-pentomino: chaotic for far longer than the observation window
  Grid g(24, 24);
  g.at(11, 10) = g.at(12, 10) = g.at(10, 11) = g.at(11, 11) = g.at(11, 12) = 1;
  const auto hist = evolve(g, 32);
  for (const auto& s : detect_structures(hist, 16))
    CHECK(s.cell_set.size() != 5);  // the pentomino itself never recurs
}

TEST_CASE("history shorter than 2*max_period is rejected") {
  const auto hist = evolve(glider_world(), 8);
  CHECK_THROWS_AS(detect_structures(hist, 16), contract_violation);
}

TEST_CASE("glider wraps the torus and keeps its displacement") {
  const Pattern glider = parse_rle("x = 3, y = 3, rule = B3/S23\nbob$2bo$3o!");
  Grid g = pattern_to_grid(glider, 16, 16, 14, 14);  // straddles the seam
  const auto found = detect_structures(evolve(g, 32), 16);
  REQUIRE(found.size() == 1);
  CHECK(found[0].period == 4);
  CHECK(found[0].dx == 1);
  CHECK(found[0].dy == 1);
}
