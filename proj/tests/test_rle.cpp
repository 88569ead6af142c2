#include <catch2/catch_amalgamated.hpp>

#include "chorus/rle.hpp"
#include "chorus/rng.hpp"

using namespace chorus;

TEST_CASE("glider decodes to its five cells") {
  const Pattern p = parse_rle("x = 3, y = 3, rule = B3/S23\nbob$2bo$3o!");
  CHECK(p.width == 3);
  CHECK(p.height == 3);
  const std::vector<std::pair<int, int>> want{{1, 0}, {2, 1}, {0, 2}, {1, 2}, {2, 2}};
  CHECK(p.cells == want);
}

TEST_CASE("empty pattern") {
  const Pattern p = parse_rle("x = 0, y = 0, rule = B3/S23\n!");
  CHECK(p.cells.empty());
  CHECK(p.width == 0);
}

TEST_CASE("comments, whitespace and missing rule are tolerated") {
  const Pattern p = parse_rle("#N test\n# another comment\nx = 2, y = 1\noo!\n");
  CHECK(p.cells.size() == 2);
}

TEST_CASE("parse errors carry line and column") {
  SECTION("run exceeds declared width") {
    CHECK_THROWS_AS(parse_rle("x = 2, y = 1, rule = B3/S23\n3o!"), parse_error);
  }
  SECTION("rows exceed declared height") {
    CHECK_THROWS_AS(parse_rle("x = 1, y = 1, rule = B3/S23\no$o!"), parse_error);
  }
  SECTION("bad character") {
    try {
      parse_rle("x = 3, y = 1, rule = B3/S23\noqo!");
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      CHECK(e.line == 2);
      CHECK(e.col == 2);
    }
  }
  SECTION("malformed header") {
    CHECK_THROWS_AS(parse_rle("x = banana, y = 1\no!"), parse_error);
    CHECK_THROWS_AS(parse_rle("y = 1\no!"), parse_error);
  }
  SECTION("unsupported rule") {
    CHECK_THROWS_AS(parse_rle("x = 1, y = 1, rule = B36/S23\no!"), parse_error);
  }
  SECTION("run count overflow") {
    CHECK_THROWS_AS(parse_rle("x = 1, y = 1\n99999999999o!"), parse_error);
  }
  SECTION("missing terminator") {
    CHECK_THROWS_AS(parse_rle("x = 1, y = 1\no"), parse_error);
  }
}

TEST_CASE("emit produces canonical text that reparses identically") {
  const char* sources[] = {
      "x = 3, y = 3, rule = B3/S23\nbob$2bo$3o!",
      "x = 4, y = 4, rule = B3/S23\n$b2o$b2o!",
      "x = 5, y = 3, rule = B3/S23\n5o2$5o!",
      "x = 0, y = 0, rule = B3/S23\n!",
      "x = 2, y = 2, rule = B3/S23\nbo$ob!",
  };
  for (const char* src : sources) {
    const Pattern p1 = parse_rle(src);
    const std::string emitted = emit_rle(p1);
    const Pattern p2 = parse_rle(emitted);
    CHECK(p1 == p2);
    CHECK(emit_rle(p2) == emitted);  // emit is a fixed point
  }
}

TEST_CASE("round trip over random patterns") {
  for (uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed, 0x777);
    Pattern p;
    p.width = 1 + int(rng.below(40));
    p.height = 1 + int(rng.below(20));
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x)
        if (rng.uniform() < 0.3) p.cells.emplace_back(x, y);
    const Pattern q = parse_rle(emit_rle(p));
    REQUIRE(q == p);
  }
}

TEST_CASE("emitted lines stay within 70 characters") {
  Pattern p;
  p.width = 200;
  p.height = 3;
  for (int x = 0; x < 200; x += 2) p.cells.emplace_back(x, 1);
  const std::string text = emit_rle(p);
  size_t start = 0;
  while (start < text.size()) {
    size_t eol = text.find('\n', start);
    if (eol == std::string::npos) eol = text.size();
    if (text.substr(start, eol - start).find("x =") == std::string::npos)
      CHECK(eol - start <= 70);
    start = eol + 1;
  }
}

TEST_CASE("plaintext render") {
  Grid g(3, 2);
  g.at(1, 0) = 1;
  g.at(2, 1) = 1;
  CHECK(render_plaintext(g) == ".O.\n..O\n");
}

TEST_CASE("stamp wraps around the torus") {
  const Pattern p = parse_rle("x = 3, y = 3, rule = B3/S23\nbob$2bo$3o!");
  Grid g = pattern_to_grid(p, 8, 8, 6, 6);
  CHECK(g.population() == 5);
  CHECK(g.at(7, 6) == 1);  // (1,0) offset by (6,6)
}
