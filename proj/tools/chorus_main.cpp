#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chorus/config.hpp"
#include "chorus/field.hpp"
#include "chorus/grid.hpp"
#include "chorus/metrics.hpp"
#include "chorus/persistence.hpp"
#include "chorus/rle.hpp"
#include "chorus/run.hpp"
#include "chorus/structures.hpp"
#include "chorus/world.hpp"

namespace fs = std::filesystem;
using namespace chorus;

namespace {

struct SubstrateArgs {
  std::string pattern;
  int ticks = 0;
  bool render = false;
  int width = 0, height = 0;
  int rule = -1;
  bool structures = false;
  int max_period = 16;
};

int cmd_substrate(const SubstrateArgs& args) {
  if (args.rule >= 0) {
    // elementary space-time grid, one row per step, single seed at center
    const int ticks = std::max(args.ticks, 1);
    const int width = args.width > 0 ? args.width : 2 * ticks + 1;
    const auto rule = ElementaryRule::from_number(args.rule);
    std::vector<uint8_t> row(size_t(width), 0);
    row[size_t(width / 2)] = 1;
    std::string out;
    for (int t = 0; t < ticks; ++t) {
      for (uint8_t c : row) out += c ? 'O' : '.';
      out += '\n';
      row = step_elementary(row, rule);
    }
    std::cout << out;
    return 0;
  }

  if (args.pattern.empty())
    throw config_error("substrate needs a pattern file or --rule N");
  const Pattern pat = parse_rle(read_file(args.pattern));
  const int width = args.width > 0 ? args.width : std::max(32, pat.width + 8);
  const int height = args.height > 0 ? args.height : std::max(32, pat.height + 8);
  Grid g = pattern_to_grid(pat, width, height, (width - pat.width) / 2,
                           (height - pat.height) / 2);
  std::vector<Grid> history{g};
  if (args.render) std::cout << render_plaintext(g) << '\n';
  for (int t = 0; t < args.ticks; ++t) {
    g = step_life(g);
    history.push_back(g);
    if (args.render) std::cout << render_plaintext(g) << '\n';
  }
  if (!args.render) std::cout << render_plaintext(g);
  if (args.structures) {
    const auto found = detect_structures(history, args.max_period);
    std::cout << "id\tperiod\tdx\tdy\tcells\tfirst_seen\tlast_seen\n";
    for (const auto& s : found)
      std::cout << s.id << '\t' << s.period << '\t' << s.dx << '\t' << s.dy
                << '\t' << s.cell_set.size() << '\t' << s.first_seen << '\t'
                << s.last_seen << '\n';
  }
  return 0;
}

struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

TsvTable read_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  TsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, '\t')) cells.push_back(cur);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

double to_f(const std::string& s) { return std::stod(s); }
int64_t to_i(const std::string& s) { return std::stoll(s); }

// Offline recomputation from the run's trajectory logs. Latent-derived
// series reproduce the online values; gamma is estimated at the symbol
// level here, and the weight- or rollout-based columns stay na.
int cmd_metrics(const std::string& logdir) {
  const fs::path dir(logdir);
  const SimConfig cfg = SimConfig::parse_file((dir / "config.canonical.cfg").string());
  const TsvTable latents = read_tsv(dir / "latents.tsv");
  const TsvTable messages = read_tsv(dir / "messages.tsv");
  const TsvTable targets = read_tsv(dir / "targets.tsv");

  // latents[tick][agent] = vector<double>
  std::map<int64_t, std::map<int, std::vector<double>>> lat;
  for (const auto& row : latents.rows) {
    std::vector<double> v;
    std::string cur;
    std::stringstream ss(row[2]);
    while (std::getline(ss, cur, ',')) v.push_back(to_f(cur));
    lat[to_i(row[0])][int(to_i(row[1]))] = std::move(v);
  }
  std::map<int64_t, std::map<int, int>> sym;  // tick -> sender -> symbol
  for (const auto& row : messages.rows)
    sym[to_i(row[0])][int(to_i(row[1]))] = int(to_i(row[3]));
  std::map<int64_t, int> tgt;
  for (const auto& row : targets.rows) tgt[to_i(row[0])] = int(to_i(row[1]));

  if (lat.empty()) throw io_error("latents.tsv holds no samples");
  const int n = int(lat.begin()->second.size());
  const int window = cfg.metrics.window;
  const int64_t last_tick = lat.rbegin()->first;

  // calibrate exactly like the online path: the first full window, pooled
  Discretizer disc;
  disc.bins = cfg.metrics.bins;
  disc.strategy = cfg.bin_strategy();
  {
    const int d = int(lat.begin()->second.begin()->second.size());
    std::vector<double> cal;
    int count = 0;
    for (const auto& [t, agents] : lat) {
      if (t >= window) break;
      for (const auto& [a, v] : agents) {
        cal.insert(cal.end(), v.begin(), v.end());
        ++count;
      }
    }
    disc.calibrate(cal, count, d);
  }

  std::ofstream out(dir / "metrics_offline.tsv", std::ios::trunc);
  out << metrics_header(cfg.metrics.lags) << '\n';
  for (int64_t T = cfg.metrics.stride; T <= last_tick + 1; T += cfg.metrics.stride) {
    std::vector<std::vector<std::vector<double>>> win;
    for (int64_t t = std::max<int64_t>(0, T - window); t < T; ++t) {
      auto it = lat.find(t);
      if (it == lat.end()) continue;
      std::vector<std::vector<double>> per_agent(static_cast<size_t>(n));
      for (const auto& [a, v] : it->second) per_agent[size_t(a)] = v;
      win.push_back(std::move(per_agent));
    }
    if (win.empty()) continue;
    MetricsRecord rec;
    rec.tick = T;
    // the online path calibrates at the first full window; phi is na before
    if (T >= window)
      rec.phi = integration_phi(win, disc, phi_groups(n, cfg.metrics.phi_max_agents),
                                cfg.metrics.mi_min_samples);
    for (int lag : cfg.metrics.lags) {
      std::optional<double> t_mean;
      if (int(win.size()) > lag) {
        double acc = 0.0;
        bool ok = true;
        for (int a = 0; a < n && ok; ++a) {
          std::vector<std::vector<double>> traj;
          for (const auto& frame : win) traj.push_back(frame[size_t(a)]);
          const auto tv = temporal_persistence(traj, lag);
          if (!tv) ok = false;
          else acc += *tv;
        }
        if (ok) t_mean = acc / n;
      }
      rec.t_persistence.emplace_back(lag, t_mean);
    }
    // synergy over the same window
    std::vector<int64_t> target;
    std::vector<std::vector<int64_t>> vars(static_cast<size_t>(n));
    for (int64_t t = std::max<int64_t>(0, T - window); t < T; ++t) {
      auto st = sym.find(t);
      auto gt = tgt.find(t);
      if (st == sym.end() || gt == tgt.end()) continue;
      target.push_back(gt->second);
      for (int a = 0; a < n; ++a) {
        auto it = st->second.find(a);
        vars[size_t(a)].push_back(it == st->second.end() ? -1 : it->second);
      }
    }
    std::string row = format_int(rec.tick) + '\t' +
                      (rec.phi ? format_double(*rec.phi) : "na") + "\tna";
    for (const auto& [lag, v] : rec.t_persistence)
      row += '\t' + (v ? format_double(*v) : std::string("na"));
    row += "\tna\tna\tna";  // e_efficacy, loss_mean, per_agent_loss
    // symbol-level gamma summary
    std::optional<double> gmean, gmax;
    if (int(target.size()) >= cfg.metrics.mi_min_samples) {
      double acc = 0.0, mx = 0.0;
      int cnt = 0;
      for (int a = 0; a < n; ++a) {
        if (vars[size_t(a)].empty()) continue;
        std::vector<int64_t> lat_ids;
        SymbolTable tab;
        for (int64_t t = std::max<int64_t>(0, T - window); t < T; ++t) {
          auto it = lat.find(t);
          if (it == lat.end()) continue;
          lat_ids.push_back(tab.id_of(disc.discretize(it->second.at(a))));
        }
        if (lat_ids.size() != vars[size_t(a)].size()) continue;
        const double mi = mi_bits(lat_ids, vars[size_t(a)]);
        acc += mi;
        mx = std::max(mx, mi);
        ++cnt;
      }
      if (cnt) {
        gmean = acc / cnt;
        gmax = mx;
      }
    }
    row += '\t' + (gmean ? format_double(*gmean) : std::string("na"));
    row += '\t' + (gmax ? format_double(*gmax) : std::string("na"));
    row += "\tna";  // coherence needs the full complex; see `topology`
    out << row << '\n';
  }
  std::cout << "wrote " << (dir / "metrics_offline.tsv").string() << '\n';
  return 0;
}

int cmd_topology(const std::string& logdir, double alpha,
                 std::optional<int64_t> tick) {
  const fs::path dir(logdir);
  const SimConfig cfg = SimConfig::parse_file((dir / "config.canonical.cfg").string());
  const TsvTable synergy = read_tsv(dir / "synergy.tsv");
  const TsvTable channel = read_tsv(dir / "channel.tsv");
  if (synergy.rows.empty()) throw io_error("synergy.tsv holds no rows");
  const int64_t want =
      tick ? *tick : to_i(synergy.rows.back()[0]);

  std::map<Simplex, double> weights;
  for (const auto& row : synergy.rows) {
    if (to_i(row[0]) != want) continue;
    Simplex s;
    std::string cur;
    std::stringstream ss(row[1]);
    while (std::getline(ss, cur, '-')) s.push_back(int(to_i(cur)));
    std::sort(s.begin(), s.end());
    weights[s] = to_f(row[2]);
  }
  if (weights.empty())
    throw io_error("no synergy rows at tick " + format_int(want));

  const int n = (cfg.substrate.width / cfg.agents.tile) *
                (cfg.substrate.height / cfg.agents.tile);
  std::vector<std::vector<double>> gamma(size_t(n), std::vector<double>(size_t(n), 0.0));
  for (const auto& row : channel.rows) {
    if (to_i(row[0]) != want || row[3] == "na") continue;
    gamma[size_t(to_i(row[1]))][size_t(to_i(row[2]))] = to_f(row[3]);
  }

  const WeightedComplex cx = build_complex(n, weights, gamma, cfg.metrics.k_max);
  const Barcode bc = persistence(cx);
  {
    std::ofstream os(dir / "barcode.tsv", std::ios::trunc);
    write_barcode_tsv(os, bc);
  }
  std::cout << "tick\t" << want << "\talpha\t" << format_double(alpha)
            << "\tcoherence\t" << format_double(coherence_index(cx, alpha))
            << '\n';
  std::cout << "wrote " << (dir / "barcode.tsv").string() << '\n';
  return 0;
}

int cmd_inspect(const std::string& snapshot) {
  const fs::path snap(snapshot);
  const fs::path cfg_path = snap.parent_path() / "config.canonical.cfg";
  const SimConfig cfg = SimConfig::parse_file(cfg_path.string());
  const World w = World::load_snapshot(read_file(snapshot), cfg);
  std::cout << "tick\t" << w.now() << '\n'
            << "grid\t" << w.grid().width << "x" << w.grid().height << '\n'
            << "population\t" << w.grid().population() << '\n'
            << "agents\t" << w.agent_count() << '\n'
            << "latent_dim\t" << cfg.agents.latent_dim << '\n'
            << "kappa\t" << cfg.comm.kappa << '\n'
            << "topology\t" << cfg.comm.topology << '\n'
            << "params_per_agent\t"
            << (w.agent_count() ? int(w.agents()[0].net().params().size()) : 0)
            << '\n'
            << "pending_messages\t" << w.agents().size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layered cellular-automaton simulator with communicating predictive agents"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a simulation config");
  std::string run_config;
  std::string resume_path;
  bool resume_latest = false;
  run_cmd->add_option("config", run_config, "config file")->required();
  run_cmd->add_option("--resume-from", resume_path, "snapshot to resume from");
  run_cmd->add_flag("--resume", resume_latest, "resume from the latest snapshot in the output dir");

  // substrate
  auto* sub_cmd = app.add_subcommand("substrate", "pure cellular-automaton runs");
  SubstrateArgs sub_args;
  sub_cmd->add_option("pattern", sub_args.pattern, "RLE pattern file");
  sub_cmd->add_option("--ticks", sub_args.ticks, "steps to run");
  sub_cmd->add_flag("--render", sub_args.render, "print every frame");
  sub_cmd->add_option("--width", sub_args.width, "world width");
  sub_cmd->add_option("--height", sub_args.height, "world height");
  sub_cmd->add_option("--rule", sub_args.rule, "elementary rule number (space-time mode)");
  sub_cmd->add_flag("--structures", sub_args.structures, "report periodic structures");
  sub_cmd->add_option("--max-period", sub_args.max_period, "structure search period cap");

  // metrics
  auto* met_cmd = app.add_subcommand("metrics", "recompute metrics from run logs");
  std::string met_dir;
  met_cmd->add_option("logdir", met_dir, "run output directory")->required();

  // topology
  auto* top_cmd = app.add_subcommand("topology", "barcode and coherence from run logs");
  std::string top_dir;
  double top_alpha = -0.01;
  int64_t top_tick = -1;
  top_cmd->add_option("logdir", top_dir, "run output directory")->required();
  top_cmd->add_option("--alpha", top_alpha, "filtration scale");
  top_cmd->add_option("--tick", top_tick, "stride tick to read (default: last)");

  // inspect
  auto* ins_cmd = app.add_subcommand("inspect", "summarize a snapshot");
  std::string ins_snap;
  ins_cmd->add_option("snapshot", ins_snap, "snapshot file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      const SimConfig cfg = SimConfig::parse_file(run_config);
      std::optional<std::string> resume;
      if (!resume_path.empty()) {
        resume = resume_path;
      } else if (resume_latest) {
        const fs::path dir = detail::output_dir(cfg);
        int64_t best = -1;
        for (const auto& entry : fs::directory_iterator(dir)) {
          const std::string name = entry.path().filename().string();
          if (name.rfind("snapshot_", 0) == 0 && name != "snapshot_final.bin") {
            const int64_t t = std::stoll(name.substr(9));
            if (t > best) {
              best = t;
              resume = entry.path().string();
            }
          }
        }
        if (!resume) throw io_error("no snapshot to resume from in " + dir.string());
      }
      const RunManifest m = run(cfg, resume);
      std::cout << "completed ticks " << m.start_tick << ".." << m.end_tick
                << ", outputs in " << detail::output_dir(cfg).string() << '\n';
      return 0;
    }
    if (sub_cmd->parsed()) return cmd_substrate(sub_args);
    if (met_cmd->parsed()) return cmd_metrics(met_dir);
    if (top_cmd->parsed())
      return cmd_topology(top_dir, top_alpha,
                          top_tick >= 0 ? std::optional<int64_t>(top_tick)
                                        : std::nullopt);
    if (ins_cmd->parsed()) return cmd_inspect(ins_snap);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
