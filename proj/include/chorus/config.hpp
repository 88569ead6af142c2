#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/field.hpp"
#include "chorus/info.hpp"
#include "chorus/network.hpp"

namespace chorus {

struct SubstrateCfg {
  std::string kind = "life";  // life | field
  int width = 32, height = 32;
  std::string init = "random";  // random | pattern
  std::string pattern;          // RLE path for init = pattern
  double density = 0.25;
  // field substrate
  int sites = 64;
  std::string potential = "double_well";
  double pot_a = 1.0, pot_b = 1.0, coupling = 0.0;
  double eta = 0.05, beta = 1.0;
};

struct AgentsCfg {
  bool enabled = true;
  int tile = 4;
  int hidden = 32;
  int latent_dim = 32;
  double lr = 0.05;
  double momentum = 0.0;
  bool attention = false;
  int attn_embed = 8;
};

struct CommCfg {
  std::string topology = "grid";  // grid | ring | full | none
  int kappa = 4;
  double vq_rate = 0.1;
  double decoder_lr = 0.05;
  int codebook_period = 8;
};

struct MetricsCfg {
  bool enabled = true;
  int window = 512;
  int stride = 64;
  int bins = 4;
  std::string strategy = "quantile";  // quantile | uniform
  std::vector<int> lags = {1};
  int k_max = 3;
  int phi_max_agents = 8;
  int mi_min_samples = 256;
  int synergy_agents = 8;
  std::string synergy_target = "center";  // center | "x,y"
  bool efficacy_enabled = true;
  int efficacy_horizon = 2;
  std::string efficacy_edge = "first";  // first | "i,j"
  double coherence_alpha = -0.01;
};

struct RunCfg {
  int64_t ticks = 1000;
  uint64_t seed = 1;
  int snapshot_period = 0;  // 0 = final snapshot only
  std::string out = "out";
  bool log_latents = true;
};

struct SimConfig {
  SubstrateCfg substrate;
  AgentsCfg agents;
  CommCfg comm;
  MetricsCfg metrics;
  RunCfg run;

  static SimConfig parse(std::string_view text);
  static SimConfig parse_file(const std::string& path);
  std::string canonical() const;
  uint64_t hash() const;
  // identity of the simulated state: everything except run length and
  // output plumbing, so a snapshot can be resumed under a longer run
  uint64_t state_hash() const;
  void validate(int line = 0) const;

  PotentialKind potential_kind() const {
    if (substrate.potential == "quadratic") return PotentialKind::quadratic;
    if (substrate.potential == "double_well") return PotentialKind::double_well;
    return PotentialKind::coupled_lattice;
  }
  BinStrategy bin_strategy() const {
    return metrics.strategy == "uniform" ? BinStrategy::uniform
                                         : BinStrategy::quantile;
  }
  TopologyKind topology_kind() const {
    if (comm.topology == "grid") return TopologyKind::grid4;
    if (comm.topology == "ring") return TopologyKind::ring;
    if (comm.topology == "full") return TopologyKind::full;
    return TopologyKind::none;
  }
};

namespace detail {

struct KeyBinding {
  std::function<void(SimConfig&, const std::string&, int line)> set;
  std::function<std::string(const SimConfig&)> get;
};

inline std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline int64_t parse_i64(const std::string& v, int line) {
  int64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw config_error("expected an integer, got '" + v + "'", line);
  return out;
}

inline uint64_t parse_u64(const std::string& v, int line) {
  uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw config_error("expected a non-negative integer, got '" + v + "'", line);
  return out;
}

inline double parse_f64(const std::string& v, int line) {
  double out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw config_error("expected a number, got '" + v + "'", line);
  return out;
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw config_error("expected true or false, got '" + v + "'", line);
}

inline std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ','))
    out.push_back(int(parse_i64(trim(cur), line)));
  if (out.empty()) throw config_error("expected a comma-separated list", line);
  return out;
}

inline std::string fmt_int_list(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_int(v[i]);
  }
  return s;
}

// section.key -> binding; doubles as schema, parser and canonical emitter
inline const std::map<std::string, KeyBinding>& config_schema() {
  static const std::map<std::string, KeyBinding> schema = [] {
    std::map<std::string, KeyBinding> m;
    auto str = [&m](const std::string& key, std::string SubstrateCfg::*field) {
      // placeholder; specializations below
      (void)key; (void)field;
    };
    (void)str;

#define CHORUS_KEY(section, name, member, parse_expr, get_expr)              \
  m[#section "." #name] = KeyBinding{                                        \
      [](SimConfig& c, const std::string& v, int line) {                     \
        (void)line;                                                          \
        c.section.member = parse_expr;                                       \
      },                                                                     \
      [](const SimConfig& c) { return get_expr; }}

    CHORUS_KEY(substrate, kind, kind, v, c.substrate.kind);
    CHORUS_KEY(substrate, width, width, int(parse_i64(v, line)), format_int(c.substrate.width));
    CHORUS_KEY(substrate, height, height, int(parse_i64(v, line)), format_int(c.substrate.height));
    CHORUS_KEY(substrate, init, init, v, c.substrate.init);
    CHORUS_KEY(substrate, pattern, pattern, v, c.substrate.pattern);
    CHORUS_KEY(substrate, density, density, parse_f64(v, line), format_double(c.substrate.density));
    CHORUS_KEY(substrate, sites, sites, int(parse_i64(v, line)), format_int(c.substrate.sites));
    CHORUS_KEY(substrate, potential, potential, v, c.substrate.potential);
    CHORUS_KEY(substrate, pot_a, pot_a, parse_f64(v, line), format_double(c.substrate.pot_a));
    CHORUS_KEY(substrate, pot_b, pot_b, parse_f64(v, line), format_double(c.substrate.pot_b));
    CHORUS_KEY(substrate, coupling, coupling, parse_f64(v, line), format_double(c.substrate.coupling));
    CHORUS_KEY(substrate, eta, eta, parse_f64(v, line), format_double(c.substrate.eta));
    CHORUS_KEY(substrate, beta, beta, parse_f64(v, line), format_double(c.substrate.beta));

    CHORUS_KEY(agents, enabled, enabled, parse_bool(v, line), c.agents.enabled ? "true" : "false");
    CHORUS_KEY(agents, tile, tile, int(parse_i64(v, line)), format_int(c.agents.tile));
    CHORUS_KEY(agents, hidden, hidden, int(parse_i64(v, line)), format_int(c.agents.hidden));
    CHORUS_KEY(agents, latent_dim, latent_dim, int(parse_i64(v, line)), format_int(c.agents.latent_dim));
    CHORUS_KEY(agents, lr, lr, parse_f64(v, line), format_double(c.agents.lr));
    CHORUS_KEY(agents, momentum, momentum, parse_f64(v, line), format_double(c.agents.momentum));
    CHORUS_KEY(agents, attention, attention, parse_bool(v, line), c.agents.attention ? "true" : "false");
    CHORUS_KEY(agents, attn_embed, attn_embed, int(parse_i64(v, line)), format_int(c.agents.attn_embed));

    CHORUS_KEY(comm, topology, topology, v, c.comm.topology);
    CHORUS_KEY(comm, kappa, kappa, int(parse_i64(v, line)), format_int(c.comm.kappa));
    CHORUS_KEY(comm, vq_rate, vq_rate, parse_f64(v, line), format_double(c.comm.vq_rate));
    CHORUS_KEY(comm, decoder_lr, decoder_lr, parse_f64(v, line), format_double(c.comm.decoder_lr));
    CHORUS_KEY(comm, codebook_period, codebook_period, int(parse_i64(v, line)), format_int(c.comm.codebook_period));

    CHORUS_KEY(metrics, enabled, enabled, parse_bool(v, line), c.metrics.enabled ? "true" : "false");
    CHORUS_KEY(metrics, window, window, int(parse_i64(v, line)), format_int(c.metrics.window));
    CHORUS_KEY(metrics, stride, stride, int(parse_i64(v, line)), format_int(c.metrics.stride));
    CHORUS_KEY(metrics, bins, bins, int(parse_i64(v, line)), format_int(c.metrics.bins));
    CHORUS_KEY(metrics, strategy, strategy, v, c.metrics.strategy);
    CHORUS_KEY(metrics, lags, lags, parse_int_list(v, line), fmt_int_list(c.metrics.lags));
    CHORUS_KEY(metrics, k_max, k_max, int(parse_i64(v, line)), format_int(c.metrics.k_max));
    CHORUS_KEY(metrics, phi_max_agents, phi_max_agents, int(parse_i64(v, line)), format_int(c.metrics.phi_max_agents));
    CHORUS_KEY(metrics, mi_min_samples, mi_min_samples, int(parse_i64(v, line)), format_int(c.metrics.mi_min_samples));
    CHORUS_KEY(metrics, synergy_agents, synergy_agents, int(parse_i64(v, line)), format_int(c.metrics.synergy_agents));
    CHORUS_KEY(metrics, synergy_target, synergy_target, v, c.metrics.synergy_target);
    CHORUS_KEY(metrics, efficacy_enabled, efficacy_enabled, parse_bool(v, line), c.metrics.efficacy_enabled ? "true" : "false");
    CHORUS_KEY(metrics, efficacy_horizon, efficacy_horizon, int(parse_i64(v, line)), format_int(c.metrics.efficacy_horizon));
    CHORUS_KEY(metrics, efficacy_edge, efficacy_edge, v, c.metrics.efficacy_edge);
    CHORUS_KEY(metrics, coherence_alpha, coherence_alpha, parse_f64(v, line), format_double(c.metrics.coherence_alpha));

    CHORUS_KEY(run, ticks, ticks, parse_i64(v, line), format_int(c.run.ticks));
    CHORUS_KEY(run, seed, seed, parse_u64(v, line), format_int(int64_t(c.run.seed)));
    CHORUS_KEY(run, snapshot_period, snapshot_period, int(parse_i64(v, line)), format_int(c.run.snapshot_period));
    CHORUS_KEY(run, out, out, v, c.run.out);
    CHORUS_KEY(run, log_latents, log_latents, parse_bool(v, line), c.run.log_latents ? "true" : "false");

#undef CHORUS_KEY
    return m;
  }();
  return schema;
}

}  // namespace detail

inline SimConfig SimConfig::parse(std::string_view text) {
  SimConfig cfg;
  const auto& schema = detail::config_schema();
  std::string section;
  int line_no = 0;
  std::map<std::string, int> seen;
  std::string line;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error("unterminated section header", line_no);
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      if (section != "substrate" && section != "agents" && section != "comm" &&
          section != "metrics" && section != "run")
        throw config_error("unknown section [" + section + "]", line_no);
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("expected key = value", line_no);
    if (section.empty())
      throw config_error("key outside of any [section]", line_no);
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    const std::string full = section + "." + key;
    auto it = schema.find(full);
    if (it == schema.end())
      throw config_error("unknown key '" + key + "' in [" + section + "]", line_no);
    if (!seen.emplace(full, line_no).second)
      throw config_error("duplicate key '" + key + "'", line_no);
    it->second.set(cfg, value, line_no);
  }
  cfg.validate();
  return cfg;
}

inline SimConfig SimConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

inline std::string SimConfig::canonical() const {
  const auto& schema = detail::config_schema();
  std::string out, section;
  for (const auto& [full, binding] : schema) {
    const std::string sec = full.substr(0, full.find('.'));
    if (sec != section) {
      section = sec;
      out += "[" + section + "]\n";
    }
    out += full.substr(full.find('.') + 1) + " = " + binding.get(*this) + "\n";
  }
  return out;
}

namespace detail {

inline uint64_t fnv1a(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline uint64_t SimConfig::hash() const { return detail::fnv1a(canonical()); }

inline uint64_t SimConfig::state_hash() const {
  std::string text;
  std::stringstream ss(canonical());
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("ticks = ", 0) == 0 || line.rfind("out = ", 0) == 0 ||
        line.rfind("snapshot_period = ", 0) == 0 ||
        line.rfind("log_latents = ", 0) == 0)
      continue;
    text += line;
    text += '\n';
  }
  return detail::fnv1a(text);
}

inline void SimConfig::validate(int line) const {
  auto fail = [&](const std::string& msg) { throw config_error(msg, line); };
  if (substrate.kind != "life" && substrate.kind != "field")
    fail("substrate.kind must be life or field");
  if (substrate.width < 3 || substrate.height < 3)
    fail("substrate extents must be >= 3");
  if (substrate.init != "random" && substrate.init != "pattern")
    fail("substrate.init must be random or pattern");
  if (substrate.init == "pattern" && substrate.pattern.empty())
    fail("substrate.init = pattern requires substrate.pattern");
  if (substrate.density < 0.0 || substrate.density > 1.0)
    fail("substrate.density must be in [0,1]");
  if (substrate.sites < 1) fail("substrate.sites must be >= 1");
  if (substrate.potential != "quadratic" && substrate.potential != "double_well" &&
      substrate.potential != "coupled_lattice")
    fail("unknown substrate.potential");
  if (substrate.eta < 0.0) fail("substrate.eta must be >= 0");
  if (substrate.beta <= 0.0) fail("substrate.beta must be > 0");
  if (substrate.kind == "life" && !agents.enabled)
    fail("life runs drive the agent pipeline; use the substrate subcommand for pure CA");
  if (agents.enabled) {
    if (agents.tile < 1) fail("agents.tile must be >= 1");
    if (substrate.kind == "life" &&
        (substrate.width % agents.tile || substrate.height % agents.tile))
      fail("agents.tile must divide substrate extents");
    if (agents.hidden < 1 || agents.latent_dim < 1)
      fail("agents.hidden and agents.latent_dim must be >= 1");
    if (agents.lr < 0.0) fail("agents.lr must be >= 0");
    if (agents.momentum < 0.0 || agents.momentum >= 1.0)
      fail("agents.momentum must be in [0,1)");
    if (agents.attn_embed < 1) fail("agents.attn_embed must be >= 1");
  }
  if (comm.topology != "grid" && comm.topology != "ring" &&
      comm.topology != "full" && comm.topology != "none")
    fail("comm.topology must be grid, ring, full or none");
  if (comm.kappa < 1 || comm.kappa > 16) fail("comm.kappa must be in 1..16");
  if (comm.vq_rate < 0.0 || comm.vq_rate > 1.0)
    fail("comm.vq_rate must be in [0,1]");
  if (comm.decoder_lr < 0.0) fail("comm.decoder_lr must be >= 0");
  if (comm.codebook_period < 1) fail("comm.codebook_period must be >= 1");
  if (metrics.window < 2) fail("metrics.window must be >= 2");
  if (metrics.stride < 1) fail("metrics.stride must be >= 1");
  if (metrics.bins < 2) fail("metrics.bins must be >= 2");
  if (metrics.strategy != "quantile" && metrics.strategy != "uniform")
    fail("metrics.strategy must be quantile or uniform");
  for (int lag : metrics.lags)
    if (lag < 0) fail("metrics.lags must be non-negative");
  if (metrics.k_max < 2 || metrics.k_max > 4)
    fail("metrics.k_max must be in 2..4");
  if (metrics.phi_max_agents < 1) fail("metrics.phi_max_agents must be >= 1");
  if (metrics.mi_min_samples < 1) fail("metrics.mi_min_samples must be >= 1");
  if (metrics.synergy_agents < 2) fail("metrics.synergy_agents must be >= 2");
  if (metrics.efficacy_horizon < 1) fail("metrics.efficacy_horizon must be >= 1");
  if (run.ticks < 0) fail("run.ticks must be >= 0");
  if (run.snapshot_period < 0) fail("run.snapshot_period must be >= 0");
  if (run.out.empty()) fail("run.out must not be empty");
}

}  // namespace chorus
