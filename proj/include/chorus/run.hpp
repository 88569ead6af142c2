#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chorus/common.hpp"
#include "chorus/config.hpp"
#include "chorus/field.hpp"
#include "chorus/metrics.hpp"
#include "chorus/serialize.hpp"
#include "chorus/world.hpp"

namespace chorus {

struct RunManifest {
  std::string artifact_version;
  std::string config_hash;
  uint64_t seed = 0;
  int64_t start_tick = 0;
  int64_t end_tick = 0;
  std::vector<std::pair<std::string, uint64_t>> files;  // name, bytes
  std::vector<std::string> metric_columns;
  bool complete = false;
};

namespace detail {

inline std::string hash_hex(uint64_t h) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

inline std::filesystem::path output_dir(const SimConfig& cfg) {
  if (const char* env = std::getenv("CHORUS_OUTPUT_DIR"))
    return std::filesystem::path(env);
  return std::filesystem::path(cfg.run.out);
}

class Tsv {
 public:
  Tsv() = default;
  void open(const std::filesystem::path& path, const std::string& header,
            bool resume) {
    path_ = path;
    const bool exists = std::filesystem::exists(path);
    file_.open(path, resume && exists ? std::ios::app : std::ios::trunc);
    if (!file_) throw io_error("cannot open log file: " + path.string());
    if (!resume || !exists) file_ << header << '\n';
  }
  void row(const std::string& line) {
    file_ << line << '\n';
    if (!file_) throw io_error("write failed: " + path_.string());
  }
  void close() {
    if (file_.is_open()) file_.close();
  }
  bool is_open() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::filesystem::path path_;
};

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace detail

inline void write_manifest(const std::filesystem::path& path,
                           const RunManifest& m) {
  nlohmann::json j;
  j["artifact_version"] = m.artifact_version;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["start_tick"] = m.start_tick;
  j["end_tick"] = m.end_tick;
  j["complete"] = m.complete;
  j["metric_columns"] = m.metric_columns;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [name, bytes] : m.files)
    files.push_back({{"name", name}, {"bytes", bytes}});
  j["files"] = files;
  write_file_atomic(path.string(), j.dump(2) + "\n");
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path.string()));
  RunManifest m;
  m.artifact_version = j.at("artifact_version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  m.start_tick = j.at("start_tick").get<int64_t>();
  m.end_tick = j.at("end_tick").get<int64_t>();
  m.complete = j.at("complete").get<bool>();
  for (const auto& c : j.at("metric_columns"))
    m.metric_columns.push_back(c.get<std::string>());
  for (const auto& f : j.at("files"))
    m.files.emplace_back(f.at("name").get<std::string>(),
                         f.at("bytes").get<uint64_t>());
  return m;
}

// Langevin trajectory run for the field substrate: one TSV with an entropy
// footer, plus the manifest.
inline RunManifest run_field(const SimConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir = detail::output_dir(cfg);
  fs::create_directories(dir);

  PotentialSpec pot{cfg.potential_kind(), cfg.substrate.pot_a,
                    cfg.substrate.pot_b, cfg.substrate.coupling};
  LangevinParams prm{cfg.substrate.eta, cfg.substrate.beta, cfg.run.seed, true};
  std::vector<FieldState> traj;
  FieldState f;
  f.values.assign(size_t(cfg.substrate.sites), 0.0);
  traj.push_back(f);
  for (int64_t t = 0; t < cfg.run.ticks; ++t)
    traj.push_back(langevin_step(traj.back(), pot, prm));

  {
    std::ofstream os(dir / "trajectory.tsv", std::ios::trunc);
    if (!os) throw io_error("cannot open trajectory log");
    write_trajectory_tsv(os, traj, pot, prm);
  }
  std::ofstream cfg_out(dir / "config.canonical.cfg", std::ios::trunc);
  cfg_out << cfg.canonical();
  cfg_out.close();

  RunManifest m;
  m.artifact_version = kVersion;
  m.config_hash = detail::hash_hex(cfg.hash());
  m.seed = cfg.run.seed;
  m.start_tick = 0;
  m.end_tick = cfg.run.ticks;
  m.complete = true;
  for (const char* name : {"trajectory.tsv", "config.canonical.cfg"})
    m.files.emplace_back(name, uint64_t(fs::file_size(dir / name)));
  write_manifest(dir / "manifest.json", m);
  return m;
}

// Full simulation run. With `resume_from` set, the world is restored from
// that snapshot and all logs are appended, so an interrupted run and an
// uninterrupted one produce identical files.
inline RunManifest run(const SimConfig& cfg,
                       const std::optional<std::string>& resume_from = {}) {
  if (cfg.substrate.kind == "field") return run_field(cfg);

  namespace fs = std::filesystem;
  const fs::path dir = detail::output_dir(cfg);
  fs::create_directories(dir);

  World world = resume_from
                    ? World::load_snapshot(read_file(*resume_from), cfg)
                    : World(cfg);
  const int64_t start = world.now();
  const bool resume = resume_from.has_value();

  detail::Tsv metrics_log, channel_log, synergy_log, latents_log, messages_log,
      targets_log, diag_log;
  const std::string metrics_header_line = metrics_header(cfg.metrics.lags);
  std::vector<std::string> files;
  if (cfg.metrics.enabled) {
    metrics_log.open(dir / "metrics.tsv", metrics_header_line, resume);
    channel_log.open(dir / "channel.tsv", "tick\tfrom\tto\tgamma_bits", resume);
    synergy_log.open(dir / "synergy.tsv", "tick\tsubset\tw_bits", resume);
    files.insert(files.end(), {"metrics.tsv", "channel.tsv", "synergy.tsv"});
    if (cfg.run.log_latents) {
      latents_log.open(dir / "latents.tsv", "tick\tagent\tlatent", resume);
      messages_log.open(dir / "messages.tsv", "tick\tfrom\tto\tsymbol", resume);
      targets_log.open(dir / "targets.tsv", "tick\tvalue", resume);
      files.insert(files.end(), {"latents.tsv", "messages.tsv", "targets.tsv"});
    }
  }
  diag_log.open(dir / "diagnostics.tsv", "tick\tmessage", resume);
  files.push_back("diagnostics.tsv");

  if (!resume) {
    std::ofstream cfg_out(dir / "config.canonical.cfg", std::ios::trunc);
    cfg_out << cfg.canonical();
  }
  files.push_back("config.canonical.cfg");

  RunManifest m;
  m.artifact_version = kVersion;
  m.config_hash = detail::hash_hex(cfg.hash());
  m.seed = cfg.run.seed;
  m.start_tick = start;
  m.end_tick = start;
  m.metric_columns = [&] {
    std::vector<std::string> cols;
    std::string cur;
    for (char c : metrics_header_line) {
      if (c == '\t') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cols.push_back(cur);
    return cols;
  }();
  // mark the run as in flight; overwritten atomically on completion
  m.complete = false;
  write_manifest(dir / "manifest.json", m);

  for (int64_t t = world.now(); t < cfg.run.ticks; ++t) {
    world.tick();
    const int64_t pre = world.now() - 1;  // tick label of this step's inputs
    if (cfg.metrics.enabled && cfg.run.log_latents) {
      for (int a = 0; a < world.agent_count(); ++a)
        latents_log.row(format_int(pre) + '\t' + format_int(a) + '\t' +
                        detail::join_doubles(world.last_latents()[size_t(a)]));
      for (auto [f, to, sym] : world.last_frame().edges)
        messages_log.row(format_int(pre) + '\t' + format_int(f) + '\t' +
                         format_int(to) + '\t' + format_int(sym));
      if (!world.last_frame().edges.empty())
        targets_log.row(format_int(pre) + '\t' + format_int(world.last_target()));
    }
    for (const auto& d : world.last_stats().diagnostics) diag_log.row(d);
    if (cfg.metrics.enabled && world.now() % cfg.metrics.stride == 0) {
      const StrideOutput so = world.compute_stride();
      metrics_log.row(metrics_row(so.record));
      for (const auto& row : so.channel)
        channel_log.row(format_int(so.record.tick) + '\t' + format_int(row.from) +
                        '\t' + format_int(row.to) + '\t' +
                        (row.gamma ? format_double(*row.gamma) : "na"));
      for (const auto& row : so.synergy) {
        std::string subset;
        for (size_t i = 0; i < row.subset.size(); ++i) {
          if (i) subset += '-';
          subset += format_int(row.subset[i]);
        }
        synergy_log.row(format_int(so.record.tick) + '\t' + subset + '\t' +
                        format_double(row.w));
      }
    }
    if (cfg.run.snapshot_period > 0 && world.now() % cfg.run.snapshot_period == 0)
      write_file_atomic((dir / ("snapshot_" + format_int(world.now()) + ".bin")).string(),
                        world.save_snapshot());
  }

  write_file_atomic((dir / "snapshot_final.bin").string(), world.save_snapshot());
  files.push_back("snapshot_final.bin");

  metrics_log.close();
  channel_log.close();
  synergy_log.close();
  latents_log.close();
  messages_log.close();
  targets_log.close();
  diag_log.close();

  m.end_tick = world.now();
  m.complete = true;
  for (const auto& name : files)
    if (fs::exists(dir / name))
      m.files.emplace_back(name, uint64_t(fs::file_size(dir / name)));
  write_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace chorus
