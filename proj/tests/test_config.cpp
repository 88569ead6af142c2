#include <catch2/catch_amalgamated.hpp>

#include "chorus/config.hpp"

using namespace chorus;

TEST_CASE("defaults parse and validate") {
  const SimConfig cfg = SimConfig::parse("");
  CHECK(cfg.substrate.kind == "life");
  CHECK(cfg.agents.tile == 4);
  CHECK(cfg.comm.kappa == 4);
  CHECK(cfg.metrics.window == 512);
  CHECK(cfg.run.seed == 1);
}

TEST_CASE("sections and keys round-trip") {
  const char* text =
      "[substrate]\n"
      "kind = life\n"
      "width = 16\n"
      "height = 16\n"
      "# a comment\n"
      "\n"
      "[agents]\n"
      "tile = 4\n"
      "lr = 0.1\n"
      "[comm]\n"
      "topology = ring\n"
      "kappa = 3\n"
      "[metrics]\n"
      "lags = 1,2,4\n"
      "[run]\n"
      "ticks = 100\n"
      "seed = 99\n";
  const SimConfig cfg = SimConfig::parse(text);
  CHECK(cfg.substrate.width == 16);
  CHECK(cfg.agents.lr == 0.1);
  CHECK(cfg.comm.topology == "ring");
  CHECK(cfg.comm.kappa == 3);
  CHECK(cfg.metrics.lags == std::vector<int>{1, 2, 4});
  CHECK(cfg.run.ticks == 100);
  CHECK(cfg.run.seed == 99);

  // canonical text reparses to an identical hash
  const SimConfig again = SimConfig::parse(cfg.canonical());
  CHECK(again.hash() == cfg.hash());
}

TEST_CASE("line-precise errors") {
  auto line_of = [](const char* text) {
    try {
      SimConfig::parse(text);
    } catch (const config_error& e) {
      return e.line;
    }
    return -1;
  };
  CHECK(line_of("[substrate]\nbogus = 1\n") == 2);
  CHECK(line_of("[substrate]\nwidth = sixteen\n") == 2);
  CHECK(line_of("[nosuch]\n") == 1);
  CHECK(line_of("width = 16\n") == 1);  // key outside a section
  CHECK(line_of("[run]\nticks = 5\nticks = 6\n") == 3);
  CHECK(line_of("[run]\nticks 5\n") == 2);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_AS(SimConfig::parse("[substrate]\nwidth = 15\n"),  // tile 4
                  config_error);
  CHECK_THROWS_AS(SimConfig::parse("[comm]\nkappa = 0\n"), config_error);
  CHECK_THROWS_AS(SimConfig::parse("[agents]\nmomentum = 1.0\n"), config_error);
  CHECK_THROWS_AS(
      SimConfig::parse("[substrate]\ninit = pattern\n"),  // missing path
      config_error);
  CHECK_THROWS_AS(SimConfig::parse("[run]\nticks = -1\n"), config_error);
}

TEST_CASE("hash changes with any field") {
  const SimConfig a = SimConfig::parse("");
  const SimConfig b = SimConfig::parse("[run]\nseed = 2\n");
  CHECK(a.hash() != b.hash());
}

TEST_CASE("unreadable file reports its path") {
  try {
    SimConfig::parse_file("definitely_missing.cfg");
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("definitely_missing.cfg") !=
          std::string::npos);
  }
}
