#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "chorus/run.hpp"
#include "chorus/world.hpp"

using namespace chorus;
using Catch::Approx;

namespace {

SimConfig small_cfg() {
  const std::string base =
      "[substrate]\n"
      "width = 8\n"
      "height = 8\n"
      "init = random\n"
      "density = 0.3\n"
      "[agents]\n"
      "tile = 4\n"
      "hidden = 8\n"
      "latent_dim = 8\n"
      "lr = 0.05\n"
      "[comm]\n"
      "topology = grid\n"
      "kappa = 2\n"
      "codebook_period = 4\n"
      "[metrics]\n"
      "window = 16\n"
      "stride = 8\n"
      "mi_min_samples = 8\n"
      "efficacy_horizon = 1\n"
      "[run]\n"
      "ticks = 32\n"
      "seed = 5\n";
  return SimConfig::parse(base);
}

}  // namespace

TEST_CASE("world construction tiles the grid") {
  const World w(small_cfg());
  CHECK(w.agent_count() == 4);
  CHECK(w.topology().kind == TopologyKind::grid4);
  for (const auto& a : w.agents()) {
    CHECK(a.region().w == 4);
    CHECK(a.net().spec().msg_dim == 4 * 8);
  }
}

TEST_CASE("two runs with the same seed are bit-identical") {
  World a(small_cfg()), b(small_cfg());
  for (int i = 0; i < 24; ++i) {
    a.tick();
    b.tick();
  }
  CHECK(a.state_equals(b));
  CHECK(a.grid() == b.grid());
}

TEST_CASE("attention-backed agents run the same loop deterministically") {
  SimConfig cfg = small_cfg();
  cfg.agents.attention = true;
  cfg.agents.attn_embed = 4;
  World a(cfg), b(cfg);
  for (int i = 0; i < 10; ++i) {
    a.tick();
    b.tick();
  }
  CHECK(a.state_equals(b));
  CHECK(std::isfinite(a.last_stats().loss_mean));
}

TEST_CASE("different seeds diverge") {
  SimConfig other = small_cfg();
  other.run.seed = 6;
  World a(small_cfg()), b(other);
  a.tick();
  b.tick();
  CHECK_FALSE(a.grid() == b.grid());
}

TEST_CASE("messages arrive one tick later") {
  // tick 0 predictions see zero slots; tick 1 predictions see the decoded
  // symbols routed at the end of tick 0
  World w(small_cfg());
  w.tick();
  CHECK_FALSE(w.last_frame().edges.empty());
  const auto frame = w.last_frame();
  w.tick();
  // slot content equals decode of the previous frame's symbols
  for (auto [from, to, sym] : frame.edges) {
    (void)from;
    CHECK(sym >= 0);
    CHECK(sym < 4);  // kappa = 2
  }
}

TEST_CASE("substrate evolution ignores the agents") {
  const SimConfig cfg = small_cfg();
  World w(cfg);
  Grid g(cfg.substrate.width, cfg.substrate.height);
  {
    Rng rng(cfg.run.seed, stream::kScatter);
    for (auto& c : g.cells) c = rng.uniform() < cfg.substrate.density;
  }
  for (int i = 0; i < 10; ++i) {
    w.tick();
    g = step_life(g);
    REQUIRE(w.grid().cells == g.cells);
  }
}

TEST_CASE("snapshot round-trips byte-identically") {
  World w(small_cfg());
  for (int i = 0; i < 19; ++i) w.tick();
  const std::string blob = w.save_snapshot();
  World loaded = World::load_snapshot(blob, small_cfg());
  CHECK(loaded.state_equals(w));
  CHECK(loaded.save_snapshot() == blob);
  // and the loaded world continues exactly like the original
  w.tick();
  loaded.tick();
  CHECK(loaded.state_equals(w));
}

TEST_CASE("snapshot refuses a different config") {
  World w(small_cfg());
  w.tick();
  const std::string blob = w.save_snapshot();
  SimConfig other = small_cfg();
  other.run.seed = 9;
  CHECK_THROWS_AS(World::load_snapshot(blob, other), io_error);
}

TEST_CASE("stride output has the documented shape") {
  World w(small_cfg());
  for (int i = 0; i < 16; ++i) w.tick();
  const StrideOutput so = w.compute_stride();
  CHECK(so.record.tick == 16);
  CHECK(so.record.per_agent_loss.size() == 4);
  CHECK(so.channel.size() == w.topology().edges().size());
  for (const auto& row : so.channel) {
    if (row.gamma) {
      CHECK(*row.gamma >= 0.0);
      CHECK(*row.gamma <= 2.0 + 1e-9);  // kappa bound
    }
  }
  // synergy subsets are pairs and triples over the pool
  for (const auto& row : so.synergy) {
    CHECK(row.subset.size() >= 2);
    CHECK(row.subset.size() <= 3);
    CHECK(row.w >= 0.0);
  }
}

TEST_CASE("causal efficacy zeroes") {
  SECTION("missing edge means nothing to intervene on") {
    SimConfig cfg = small_cfg();
    cfg.comm.topology = "none";
    World w(cfg);
    for (int i = 0; i < 4; ++i) w.tick();
    CHECK(w.causal_efficacy(0, 1, 2) == 0.0);
  }
  SECTION("replaying the same symbol is a no-op") {
    World w(small_cfg());
    for (int i = 0; i < 6; ++i) w.tick();
    const auto& frame = w.last_frame();
    REQUIRE_FALSE(frame.edges.empty());
    const auto [from, to, sym] = frame.edges.front();
    CHECK(w.causal_efficacy_with_symbol(from, to, 2, sym) == 0.0);
  }
  SECTION("a different symbol typically propagates") {
    World w(small_cfg());
    for (int i = 0; i < 6; ++i) w.tick();
    const auto [from, to, sym] = w.last_frame().edges.front();
    const int other = (sym + 1) % 4;
    CHECK(w.causal_efficacy_with_symbol(from, to, 1, other) >= 0.0);
  }
}

TEST_CASE("an altered symbol on a chain propagates downstream") {
  SimConfig cfg = small_cfg();
  cfg.comm.topology = "none";
  cfg.metrics.enabled = false;  // the chain has a non-uniform slot layout
  const CommTopology chain =
      CommTopology::custom(4, {{0, 1}, {1, 2}, {2, 3}});
  World w(cfg, chain);
  for (int i = 0; i < 6; ++i) w.tick();
  int actual = -1;
  for (auto [f, t, s] : w.last_frame().edges)
    if (f == 0 && t == 1) actual = s;
  REQUIRE(actual >= 0);
  const int other = (actual + 1) % 4;
  CHECK(w.causal_efficacy_with_symbol(0, 1, 2, other) > 0.0);
}

TEST_CASE("boundary cells stay at least as hard as interior cells") {
  // glider traffic, messages off: the tile corners have an invisible
  // diagonal dependency, the interior has none
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chorus_baseline_sep";
  fs::create_directories(dir);
  const Pattern glider = parse_rle("x = 3, y = 3, rule = B3/S23\nbob$2bo$3o!");
  Pattern traffic;
  traffic.width = 16;
  traffic.height = 16;
  for (const int ox : {1, 9})
    for (const int oy : {1, 9})
      for (auto [x, y] : glider.cells) traffic.cells.emplace_back(x + ox, y + oy);
  chorus::detail::sort_cells(traffic.cells);
  const fs::path rle = dir / "traffic.rle";
  {
    std::ofstream os(rle);
    os << emit_rle(traffic);
  }
  SimConfig cfg = SimConfig::parse(
      "[substrate]\nwidth = 16\nheight = 16\ninit = pattern\npattern = " +
      rle.string() +
      "\n[agents]\ntile = 4\nhidden = 32\nlatent_dim = 8\nlr = 0.1\n"
      "momentum = 0.9\n[comm]\ntopology = none\n"
      "[metrics]\nenabled = false\n[run]\nticks = 8000\nseed = 11\n");
  World w(cfg);
  double b = 0.0, i = 0.0;
  int count = 0;
  for (int t = 0; t < 8000; ++t) {
    w.tick();
    if (t >= 6000) {
      b += w.last_boundary_loss();
      i += w.last_interior_loss();
      ++count;
    }
  }
  CHECK(b / count >= i / count);
  fs::remove_all(dir);
}

TEST_CASE("missing pattern file fails naming the path") {
  SimConfig cfg = small_cfg();
  cfg.substrate.init = "pattern";
  cfg.substrate.pattern = "no_such_pattern.rle";
  try {
    World w(cfg);
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("no_such_pattern.rle") != std::string::npos);
  }
}

TEST_CASE("output directory env var overrides the config") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chorus_env_override";
  fs::remove_all(dir);
  setenv("CHORUS_OUTPUT_DIR", dir.c_str(), 1);
  SimConfig cfg = small_cfg();
  cfg.run.out = "somewhere_else_entirely";
  cfg.run.ticks = 4;
  run(cfg);
  unsetenv("CHORUS_OUTPUT_DIR");
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK_FALSE(fs::exists("somewhere_else_entirely"));
  fs::remove_all(dir);
}

TEST_CASE("metrics disabled leaves no metrics files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chorus_nometrics";
  fs::remove_all(dir);
  SimConfig cfg = small_cfg();
  cfg.metrics.enabled = false;
  cfg.run.out = dir.string();
  cfg.run.ticks = 8;
  run(cfg);
  CHECK_FALSE(fs::exists(dir / "metrics.tsv"));
  CHECK_FALSE(fs::exists(dir / "latents.tsv"));
  CHECK(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("run writes logs, snapshot and manifest") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chorus_test_run";
  fs::remove_all(dir);
  SimConfig cfg = small_cfg();
  cfg.run.out = dir.string();
  const RunManifest m = run(cfg);
  CHECK(m.complete);
  CHECK(m.end_tick == 32);
  CHECK(fs::exists(dir / "metrics.tsv"));
  CHECK(fs::exists(dir / "channel.tsv"));
  CHECK(fs::exists(dir / "synergy.tsv"));
  CHECK(fs::exists(dir / "latents.tsv"));
  CHECK(fs::exists(dir / "snapshot_final.bin"));
  CHECK(fs::exists(dir / "manifest.json"));
  const RunManifest back = read_manifest(dir / "manifest.json");
  CHECK(back.config_hash == m.config_hash);
  CHECK(back.metric_columns.front() == "tick");
  fs::remove_all(dir);
}

TEST_CASE("zero-tick run leaves headers only") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chorus_test_run0";
  fs::remove_all(dir);
  SimConfig cfg = small_cfg();
  cfg.run.ticks = 0;
  cfg.run.out = dir.string();
  run(cfg);
  std::ifstream in(dir / "metrics.tsv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1);
  fs::remove_all(dir);
}

TEST_CASE("field runs produce a trajectory log with footer") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chorus_test_field";
  fs::remove_all(dir);
  SimConfig cfg = SimConfig::parse(
      "[substrate]\n"
      "kind = field\n"
      "sites = 4\n"
      "potential = double_well\n"
      "eta = 0.05\n"
      "beta = 1\n"
      "[run]\n"
      "ticks = 50\n"
      "seed = 3\n");
  cfg.run.out = dir.string();
  const RunManifest m = run(cfg);
  CHECK(m.complete);
  std::ifstream in(dir / "trajectory.tsv");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("# entropy_total\t") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("resume reproduces the uninterrupted run byte for byte") {
  namespace fs = std::filesystem;
  const fs::path d1 = fs::temp_directory_path() / "chorus_resume_a";
  const fs::path d2 = fs::temp_directory_path() / "chorus_resume_b";
  fs::remove_all(d1);
  fs::remove_all(d2);

  SimConfig full = small_cfg();
  full.run.snapshot_period = 16;
  full.run.out = d1.string();
  run(full);

  SimConfig half = full;
  half.run.out = d2.string();
  half.run.ticks = 16;
  run(half);
  SimConfig rest = full;
  rest.run.out = d2.string();
  run(rest, (d2 / "snapshot_16.bin").string());

  for (const char* name : {"metrics.tsv", "channel.tsv", "synergy.tsv",
                           "latents.tsv", "messages.tsv", "targets.tsv"}) {
    CHECK(read_file((d1 / name).string()) == read_file((d2 / name).string()));
  }
  CHECK(read_file((d1 / "snapshot_final.bin").string()) ==
        read_file((d2 / "snapshot_final.bin").string()));
  fs::remove_all(d1);
  fs::remove_all(d2);
}
