#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chorus/agent.hpp"
#include "chorus/grid.hpp"
#include "chorus/rng.hpp"

using namespace chorus;
using Catch::Approx;

namespace {

AgentInput random_input(const AgentModel& a, uint64_t seed) {
  Rng rng(seed, 0x4242);
  AgentInput in;
  in.view.resize(size_t(a.net().spec().view_dim));
  for (auto& v : in.view) v = rng.below(2);
  in.msgs.resize(size_t(a.net().spec().msg_dim));
  for (auto& v : in.msgs) v = rng.uniform_in(-1.0, 1.0);
  return in;
}

}  // namespace

TEST_CASE("view covers the tile and its edge strips but not the corners") {
  const TileRect r{4, 4, 4, 4};
  const auto coords = view_coords(r);
  CHECK(coords.size() == 16 + 4 * 4);  // tile + four strips
  for (auto [x, y] : coords) {
    const bool corner = (x == 3 || x == 8) && (y == 3 || y == 8);
    CHECK_FALSE(corner);
  }
  // row-major: first coordinate is the top strip's left cell
  CHECK(coords.front() == std::pair<int, int>{4, 3});
  CHECK(coords.back() == std::pair<int, int>{7, 8});
}

TEST_CASE("view extraction wraps the torus") {
  Grid g(8, 8);
  g.at(7, 7) = 1;  // NW-adjacent of tile at origin is off-view (corner)
  g.at(0, 7) = 1;  // top strip of tile (0,0)
  const TileRect r{0, 0, 4, 4};
  const auto v = extract_view(g, r);
  CHECK(v[0] == 1.0);  // (0,-1) wraps to (0,7)
  double total = 0;
  for (double x : v) total += x;
  CHECK(total == 1.0);  // the corner cell is invisible
}

TEST_CASE("boundary cells are the tile's edge ring") {
  const auto idx = boundary_cell_indices({0, 0, 4, 4});
  CHECK(idx.size() == 12);
  const auto idx3 = boundary_cell_indices({0, 0, 3, 3});
  CHECK(idx3.size() == 8);
}

TEST_CASE("loss closed forms") {
  Prediction p;
  p.probs = {0.5};
  CHECK(bce_loss(p, std::vector<uint8_t>{1}) == Approx(std::log(2.0)).epsilon(1e-12));
  p.probs = {0.9};
  CHECK(bce_loss(p, std::vector<uint8_t>{1}) == Approx(-std::log(0.9)).epsilon(1e-12));
  CHECK(bce_loss(p, std::vector<uint8_t>{0}) == Approx(-std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  AgentConfig cfg;
  cfg.hidden = 8;
  cfg.latent_dim = 8;
  AgentModel a(0, {0, 0, 2, 2}, cfg, 0, 0, 42);
  const auto before = a.net().params();
  const AgentInput in = random_input(a, 1);
  std::vector<uint8_t> obs{1, 0, 1, 0};
  a.update(in, obs, 0.0);
  CHECK(a.net().params() == before);
}

TEST_CASE("training on a constant region drives the loss down") {
  AgentConfig cfg;
  cfg.hidden = 16;
  cfg.latent_dim = 16;
  cfg.lr = 0.2;
  cfg.momentum = 0.9;
  AgentModel a(0, {0, 0, 4, 4}, cfg, 0, 0, 7);
  AgentInput in;
  in.view.assign(size_t(a.net().spec().view_dim), 0.0);
  std::vector<uint8_t> obs(16, 0);
  obs[5] = 1;  // fixed target pattern
  double last = 0.0;
  for (int step = 0; step < 500; ++step)
    last = a.update(in, obs, cfg.lr).loss;
  CHECK(last < 0.01);
}

TEST_CASE("latent matches the prediction pass and has latent_dim entries") {
  AgentConfig cfg;
  cfg.latent_dim = 12;
  AgentModel a(3, {0, 0, 2, 2}, cfg, 2, 12, 5);
  const AgentInput in = random_input(a, 9);
  const auto l1 = a.latent(in);
  a.predict(in);
  CHECK(l1 == a.last_latent());
  CHECK(l1.size() == 12);
  for (double v : l1) CHECK(std::isfinite(v));
}

TEST_CASE("momentum accumulates velocity") {
  AgentConfig cfg;
  cfg.hidden = 4;
  cfg.latent_dim = 4;
  cfg.momentum = 0.9;
  AgentModel a(0, {0, 0, 2, 2}, cfg, 0, 0, 11);
  const AgentInput in = random_input(a, 2);
  std::vector<uint8_t> obs{1, 1, 0, 0};
  a.update(in, obs, 0.1);
  const auto v1 = a.velocity();
  a.update(in, obs, 0.1);
  CHECK(a.velocity() != v1);
}

TEST_CASE("messages influence predictions through the trunk") {
  AgentConfig cfg;
  AgentModel a(0, {0, 0, 2, 2}, cfg, 1, 32, 13);
  AgentInput in = random_input(a, 3);
  const auto p1 = a.predict(in).probs;
  in.msgs[0] += 1.0;
  const auto p2 = a.predict(in).probs;
  CHECK(p1 != p2);
}
