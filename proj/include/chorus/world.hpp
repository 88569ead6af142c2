#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chorus/agent.hpp"
#include "chorus/codebook.hpp"
#include "chorus/complex.hpp"
#include "chorus/config.hpp"
#include "chorus/grid.hpp"
#include "chorus/info.hpp"
#include "chorus/metrics.hpp"
#include "chorus/network.hpp"
#include "chorus/persistence.hpp"
#include "chorus/rle.hpp"
#include "chorus/rng.hpp"
#include "chorus/serialize.hpp"

namespace chorus {

namespace detail {

// Fixed-capacity ring of equal-length entries, flat storage so copies and
// snapshots stay cheap and exact.
template <typename T>
struct Ring {
  int capacity = 0;
  int entry = 0;
  int64_t count = 0;
  std::vector<T> data;

  void init(int cap, int len) {
    capacity = cap;
    entry = len;
    count = 0;
    data.assign(size_t(cap) * size_t(len), T{});
  }
  T* push() {
    T* p = data.data() + size_t(count % capacity) * size_t(entry);
    ++count;
    return p;
  }
  int size() const {
    return int(std::min<int64_t>(count, capacity));
  }
  // i = 0 is the oldest retained entry
  const T* at(int i) const {
    const int64_t start = count - size();
    return data.data() + size_t((start + i) % capacity) * size_t(entry);
  }

  bool operator==(const Ring&) const = default;
};

}  // namespace detail

struct TickStats {
  std::vector<double> per_agent_loss;
  double loss_mean = 0.0;
  double boundary_loss = 0.0;
  double interior_loss = 0.0;
  std::vector<std::string> diagnostics;
};

struct ChannelRow {
  int from = 0, to = 0;
  std::optional<double> gamma;
};

struct SynergyRow {
  std::vector<int> subset;
  double w = 0.0;
};

struct StrideOutput {
  MetricsRecord record;
  std::vector<ChannelRow> channel;
  std::vector<SynergyRow> synergy;
};

inline constexpr uint32_t kSnapshotVersion = 1;
inline constexpr int kReflexivityBatch = 16;

// The full simulation state: substrate, predictors, codebooks, pending
// messages and the metric windows. Value semantics throughout; tick() is
// transactional (either the whole tick lands or none of it).
class World {
 public:
  World() = default;

  explicit World(const SimConfig& cfg,
                 std::optional<CommTopology> topology_override = std::nullopt)
      : cfg_(cfg) {
    if (cfg.substrate.kind != "life")
      throw contract_violation("World drives the life substrate; field runs use langevin_step");
    if (!cfg.agents.enabled)
      throw contract_violation("World requires agents.enabled");
    cfg_.validate();

    grid_ = Grid(cfg.substrate.width, cfg.substrate.height);
    if (cfg.substrate.init == "pattern") {
      const Pattern pat = parse_rle(read_file(cfg.substrate.pattern));
      stamp(grid_, pat, (grid_.width - pat.width) / 2,
            (grid_.height - pat.height) / 2);
    } else {
      Rng rng(cfg.run.seed, stream::kScatter);
      for (auto& c : grid_.cells) c = rng.uniform() < cfg.substrate.density;
    }

    tiles_x_ = cfg.substrate.width / cfg.agents.tile;
    tiles_y_ = cfg.substrate.height / cfg.agents.tile;
    const int n = tiles_x_ * tiles_y_;

    if (topology_override) {
      topo_ = *topology_override;
      if (topo_.n != n)
        throw contract_violation("topology override has wrong agent count");
    } else {
      switch (cfg_.topology_kind()) {
        case TopologyKind::grid4: topo_ = CommTopology::grid(tiles_x_, tiles_y_); break;
        case TopologyKind::ring: topo_ = CommTopology::ring(n); break;
        case TopologyKind::full: topo_ = CommTopology::full(n); break;
        default: topo_ = CommTopology::none(n); break;
      }
    }

    AgentConfig acfg;
    acfg.hidden = cfg.agents.hidden;
    acfg.latent_dim = cfg.agents.latent_dim;
    acfg.lr = cfg.agents.lr;
    acfg.momentum = cfg.agents.momentum;
    acfg.attention = cfg.agents.attention;
    acfg.attn_embed = cfg.agents.attn_embed;

    agents_.reserve(size_t(n));
    books_.reserve(size_t(n));
    slots_.resize(size_t(n));
    for (int a = 0; a < n; ++a) {
      const TileRect r{(a % tiles_x_) * cfg.agents.tile,
                       (a / tiles_x_) * cfg.agents.tile, cfg.agents.tile,
                       cfg.agents.tile};
      agents_.emplace_back(a, r, acfg, topo_.slots(a), cfg.agents.latent_dim,
                           cfg.run.seed);
      books_.push_back(Codebook::init(a, cfg.comm.kappa, cfg.agents.latent_dim,
                                      cfg.run.seed));
      slots_[size_t(a)].assign(size_t(topo_.slots(a)) * cfg.agents.latent_dim, 0.0);
    }
    pending_.tick = -1;

    disc_.bins = cfg.metrics.bins;
    disc_.strategy = cfg_.bin_strategy();

    const int d = cfg.agents.latent_dim;
    const int w = cfg.metrics.window;
    if (comm_active() || cfg.metrics.enabled) latents_.init(w, n * d);
    if (cfg.metrics.enabled) {
      symbols_.init(w, n);
      targets_.init(w, 1);
      const int edges = int(topo_.edges().size());
      if (edges > 0) channel_.init(w, edges * 2 * d);
      for (int a = 1; a < n; ++a)
        if (topo_.slots(a) != topo_.slots(0))
          throw contract_violation("metrics require a uniform slot count per agent");
      input_len_ = int(view_coords(agents_[0].region()).size()) +
                   topo_.slots(0) * d;
      inputs_.init(kReflexivityBatch, n * input_len_);
      target_cell_ = resolve_target();
      synergy_pool_ = resolve_pool();
      efficacy_edge_ = resolve_efficacy_edge();
    }
  }

  const SimConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }
  int64_t now() const { return grid_.tick; }
  int agent_count() const { return int(agents_.size()); }
  const std::vector<AgentModel>& agents() const { return agents_; }
  const std::vector<Codebook>& books() const { return books_; }
  const CommTopology& topology() const { return topo_; }
  const TickStats& last_stats() const { return stats_; }
  const MessageFrame& last_frame() const { return last_frame_; }
  const std::vector<std::vector<double>>& last_latents() const { return last_latents_; }
  uint8_t last_target() const { return last_target_; }
  const Discretizer& discretizer() const { return disc_; }

  bool comm_active() const { return topo_.kind != TopologyKind::none; }

  // Ordered phases: predict, substrate step, train, route, adapt, window
  // update. Runs on a staged copy and commits at the end, so a failed
  // phase leaves the world untouched.
  void tick() {
    World staged(*this);
    staged.tick_impl();
    *this = std::move(staged);
  }

  // --- metrics (pure; computed from the post-tick windows) ---

  StrideOutput compute_stride() const {
    if (!cfg_.metrics.enabled)
      throw contract_violation("compute_stride: metrics disabled");
    StrideOutput out;
    out.record.tick = grid_.tick;
    out.record.per_agent_loss = stats_.per_agent_loss;
    out.record.loss_mean = stats_.loss_mean;

    const int n = agent_count();
    const int d = cfg_.agents.latent_dim;

    if (disc_.calibrated() && latents_.size() >= cfg_.metrics.mi_min_samples) {
      auto window = latent_window();
      out.record.phi = integration_phi(window, disc_,
                                       phi_groups(n, cfg_.metrics.phi_max_agents),
                                       cfg_.metrics.mi_min_samples);
    }

    if (inputs_.size() > 0) {
      double r_acc = 0.0;
      for (int a = 0; a < n; ++a)
        r_acc += reflexivity(agents_[size_t(a)], input_batch(a));
      out.record.r_mean = r_acc / double(n);
    }

    for (int lag : cfg_.metrics.lags) {
      std::optional<double> t_mean;
      if (latents_.size() > lag) {
        double acc = 0.0;
        bool ok = true;
        for (int a = 0; a < n && ok; ++a) {
          auto traj = latent_trajectory(a);
          auto t = temporal_persistence(traj, lag);
          if (!t) ok = false;
          else acc += *t;
        }
        if (ok) t_mean = acc / double(n);
      }
      out.record.t_persistence.emplace_back(lag, t_mean);
    }

    if (cfg_.metrics.efficacy_enabled) {
      if (efficacy_edge_)
        out.record.e_efficacy = causal_efficacy(
            efficacy_edge_->first, efficacy_edge_->second,
            cfg_.metrics.efficacy_horizon);
      else
        out.record.e_efficacy = 0.0;  // nothing to intervene on
    }

    // channel MI per directed edge
    std::vector<std::vector<double>> gamma(size_t(n), std::vector<double>(size_t(n), 0.0));
    const auto edges = topo_.edges();
    double gsum = 0.0, gmax = 0.0;
    int gcount = 0;
    for (int e = 0; e < int(edges.size()); ++e) {
      ChannelRow row{edges[size_t(e)].from, edges[size_t(e)].to, std::nullopt};
      if (channel_.size() >= cfg_.metrics.mi_min_samples) {
        std::vector<std::vector<int>> xs, ys;
        xs.reserve(size_t(channel_.size()));
        ys.reserve(size_t(channel_.size()));
        for (int i = 0; i < channel_.size(); ++i) {
          const int8_t* p = channel_.at(i) + size_t(e) * 2 * d;
          xs.emplace_back(p, p + d);
          ys.emplace_back(p + d, p + 2 * d);
        }
        row.gamma = channel_mi(xs, ys, cfg_.metrics.mi_min_samples);
      }
      if (row.gamma) {
        gamma[size_t(row.from)][size_t(row.to)] = *row.gamma;
        gsum += *row.gamma;
        gmax = std::max(gmax, *row.gamma);
        ++gcount;
      }
      out.channel.push_back(std::move(row));
    }
    if (gcount > 0) {
      out.record.gamma_mean = gsum / gcount;
      out.record.gamma_max = gmax;
    }

    // synergy over the agent pool nearest the target cell
    if (comm_active() && symbols_.size() >= cfg_.metrics.mi_min_samples) {
      const int t = symbols_.size();
      std::vector<int64_t> target(static_cast<size_t>(t));
      for (int i = 0; i < t; ++i) target[size_t(i)] = *targets_.at(i);
      std::vector<std::vector<int64_t>> vars(synergy_pool_.size());
      for (size_t v = 0; v < synergy_pool_.size(); ++v) {
        vars[v].resize(size_t(t));
        for (int i = 0; i < t; ++i)
          vars[v][size_t(i)] = symbols_.at(i)[size_t(synergy_pool_[v])];
      }
      std::map<Simplex, double> weights;
      const int max_size = std::min(cfg_.metrics.k_max, int(synergy_pool_.size()));
      std::vector<int> idx;
      enumerate_subsets(int(synergy_pool_.size()), max_size, idx, [&](const std::vector<int>& sub) {
        const double w = synergy_weight(sub, target, vars);
        Simplex s;
        for (int i : sub) s.push_back(synergy_pool_[size_t(i)]);
        std::sort(s.begin(), s.end());
        weights[s] = w;
        out.synergy.push_back({s, w});
      });
      const WeightedComplex cx =
          build_complex(n, weights, gamma, cfg_.metrics.k_max);
      out.record.coherence = coherence_index(cx, cfg_.metrics.coherence_alpha);
    }
    return out;
  }

  // Interventional KL through the message layer: replace the pending
  // symbol on one edge, roll both variants forward `horizon` ticks and
  // compare every agent's predictions (bits, mean over cells then agents).
  // The substrate itself evolves identically in both rollouts.
  double causal_efficacy(int from, int to, int horizon) const {
    if (horizon < 1) throw contract_violation("causal_efficacy: horizon must be >= 1");
    if (!topo_.has_edge(from, to)) return 0.0;
    const int sym = Rng(cfg_.run.seed, stream::kIntervene,
                        uint64_t(from) * uint64_t(topo_.n) + uint64_t(to),
                        uint64_t(grid_.tick))
                        .below(uint64_t(books_[size_t(from)].alphabet()));
    return causal_efficacy_with_symbol(from, to, horizon, int(sym));
  }

  double causal_efficacy_with_symbol(int from, int to, int horizon,
                                     int symbol) const {
    if (horizon < 1) throw contract_violation("causal_efficacy: horizon must be >= 1");
    if (!topo_.has_edge(from, to)) return 0.0;
    World factual(*this);
    World dosed(*this);
    dosed.replace_pending_symbol(from, to, symbol);
    for (int h = 0; h < horizon; ++h) {
      factual.tick_impl();
      dosed.tick_impl();
    }
    double acc = 0.0;
    for (int a = 0; a < agent_count(); ++a) {
      const auto& p = factual.last_probs_[size_t(a)];
      const auto& q = dosed.last_probs_[size_t(a)];
      double kl = 0.0;
      for (size_t i = 0; i < p.size(); ++i)
        kl += p[i] * std::log2(p[i] / q[i]) +
              (1.0 - p[i]) * std::log2((1.0 - p[i]) / (1.0 - q[i]));
      acc += kl / double(p.size());
    }
    return acc / double(agent_count());
  }

  // boundary/interior split of the last tick's per-cell losses
  double last_boundary_loss() const { return stats_.boundary_loss; }
  double last_interior_loss() const { return stats_.interior_loss; }

  // --- snapshots ---

  std::string save_snapshot() const {
    BinWriter w;
    w.u32(0x43484f52);  // "CHOR"
    w.u32(kSnapshotVersion);
    w.u64(cfg_.state_hash());
    w.i32(grid_.width);
    w.i32(grid_.height);
    w.i64(grid_.tick);
    w.vec_u8(grid_.cells);
    w.u32(uint32_t(agents_.size()));
    for (const auto& a : agents_) {
      w.i32(a.id());
      w.i32(a.region().x0);
      w.i32(a.region().y0);
      w.i32(a.region().w);
      w.i32(a.region().h);
      w.vec_f64(a.net().params());
      w.vec_f64(a.velocity());
    }
    for (const auto& b : books_) {
      w.i32(b.owner);
      w.i32(b.kappa);
      w.i32(b.dim);
      w.vec_f64(b.centroids);
      w.vec_f64(b.decode_map);
    }
    for (const auto& s : slots_) w.vec_f64(s);
    w.i64(pending_.tick);
    w.u32(uint32_t(pending_.edges.size()));
    for (auto [f, t, s] : pending_.edges) {
      w.i32(f);
      w.i32(t);
      w.i32(s);
    }
    auto ring_f64 = [&](const detail::Ring<double>& r) {
      w.i32(r.capacity);
      w.i32(r.entry);
      w.i64(r.count);
      w.vec_f64(r.data);
    };
    ring_f64(latents_);
    ring_f64(inputs_);
    w.i32(symbols_.capacity);
    w.i32(symbols_.entry);
    w.i64(symbols_.count);
    w.u64(symbols_.data.size());
    for (int32_t v : symbols_.data) w.i32(v);
    w.i32(targets_.capacity);
    w.i32(targets_.entry);
    w.i64(targets_.count);
    w.vec_u8(targets_.data);
    w.i32(channel_.capacity);
    w.i32(channel_.entry);
    w.i64(channel_.count);
    w.u64(channel_.data.size());
    for (int8_t v : channel_.data) w.u8(uint8_t(v));
    w.u8(disc_.calibrated() ? 1 : 0);
    if (disc_.calibrated()) {
      w.u32(uint32_t(disc_.edges.size()));
      for (const auto& e : disc_.edges) w.vec_f64(e);
    }
    return w.buffer();
  }

  static World load_snapshot(const std::string& blob, const SimConfig& cfg) {
    BinReader r(blob);
    if (r.u32() != 0x43484f52) throw io_error("not a snapshot file");
    if (r.u32() != kSnapshotVersion) throw io_error("snapshot version mismatch");
    const uint64_t hash = r.u64();
    if (hash != cfg.state_hash())
      throw io_error("snapshot was produced by a different config");
    World w(cfg);
    w.grid_.width = r.i32();
    w.grid_.height = r.i32();
    w.grid_.tick = r.i64();
    w.grid_.cells = r.vec_u8();
    const uint32_t n = r.u32();
    if (n != w.agents_.size()) throw io_error("snapshot agent count mismatch");
    for (auto& a : w.agents_) {
      const int id = r.i32();
      TileRect rect{r.i32(), r.i32(), r.i32(), r.i32()};
      if (id != a.id() || !(rect == a.region()))
        throw io_error("snapshot tiling mismatch");
      a.net().set_params(r.vec_f64());
      a.velocity() = r.vec_f64();
    }
    for (auto& b : w.books_) {
      b.owner = r.i32();
      b.kappa = r.i32();
      b.dim = r.i32();
      b.centroids = r.vec_f64();
      b.decode_map = r.vec_f64();
    }
    for (auto& s : w.slots_) s = r.vec_f64();
    w.pending_.tick = r.i64();
    w.pending_.edges.clear();
    const uint32_t ne = r.u32();
    for (uint32_t i = 0; i < ne; ++i) {
      const int f = r.i32(), t = r.i32(), s = r.i32();
      w.pending_.edges.emplace_back(f, t, s);
    }
    auto ring_f64 = [&](detail::Ring<double>& ring) {
      ring.capacity = r.i32();
      ring.entry = r.i32();
      ring.count = r.i64();
      ring.data = r.vec_f64();
    };
    ring_f64(w.latents_);
    ring_f64(w.inputs_);
    w.symbols_.capacity = r.i32();
    w.symbols_.entry = r.i32();
    w.symbols_.count = r.i64();
    w.symbols_.data.resize(r.u64());
    for (auto& v : w.symbols_.data) v = r.i32();
    w.targets_.capacity = r.i32();
    w.targets_.entry = r.i32();
    w.targets_.count = r.i64();
    w.targets_.data = r.vec_u8();
    w.channel_.capacity = r.i32();
    w.channel_.entry = r.i32();
    w.channel_.count = r.i64();
    w.channel_.data.resize(r.u64());
    for (auto& v : w.channel_.data) v = int8_t(r.u8());
    if (r.u8()) {
      w.disc_.edges.resize(r.u32());
      for (auto& e : w.disc_.edges) e = r.vec_f64();
    }
    if (!r.at_end()) throw io_error("snapshot has trailing bytes");
    return w;
  }

  bool state_equals(const World& o) const {
    return grid_ == o.grid_ && agents_ == o.agents_ && books_ == o.books_ &&
           slots_ == o.slots_ && pending_ == o.pending_ &&
           latents_ == o.latents_ && symbols_ == o.symbols_ &&
           targets_ == o.targets_ && channel_ == o.channel_ &&
           inputs_ == o.inputs_ && disc_ == o.disc_;
  }

 private:
  void tick_impl() {
    const int n = agent_count();
    const int64_t t = grid_.tick;
    stats_ = TickStats{};
    stats_.per_agent_loss.resize(size_t(n));
    last_probs_.resize(size_t(n));
    last_latents_.resize(size_t(n));
    msg_grads_.resize(size_t(n));

    // 1: predict t+1 from view(t) and the messages decoded last tick
    std::vector<AgentInput> inputs(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
      inputs[size_t(a)].view = extract_view(grid_, agents_[size_t(a)].region());
      inputs[size_t(a)].msgs = slots_[size_t(a)];
      const Prediction p = agents_[size_t(a)].predict(inputs[size_t(a)]);
      last_probs_[size_t(a)] = p.probs;
      last_latents_[size_t(a)] = agents_[size_t(a)].last_latent();
    }

    // 2: the substrate follows its own rule, regardless of the agents
    Grid next = step_life(grid_);

    // 3: train on the realized outcome
    double bsum = 0.0, isum = 0.0;
    int64_t bcount = 0, icount = 0;
    for (int a = 0; a < n; ++a) {
      const auto obs = observe_region(next, agents_[size_t(a)].region());
      UpdateResult res = agents_[size_t(a)].update_cached(obs, cfg_.agents.lr);
      stats_.per_agent_loss[size_t(a)] = res.loss;
      stats_.loss_mean += res.loss / double(n);
      if (!res.applied && !res.diagnostic.empty())
        stats_.diagnostics.push_back("tick " + format_int(t) + ": " + res.diagnostic);
      msg_grads_[size_t(a)] = std::move(res.msg_gradient);
      // boundary vs interior split
      const auto& probs = last_probs_[size_t(a)];
      const TileRect& reg = agents_[size_t(a)].region();
      for (int y = 0; y < reg.h; ++y)
        for (int x = 0; x < reg.w; ++x) {
          const size_t ci = size_t(y) * reg.w + x;
          const double cell_loss =
              obs[ci] ? -std::log(probs[ci]) : -std::log(1.0 - probs[ci]);
          const bool boundary =
              x == 0 || y == 0 || x == reg.w - 1 || y == reg.h - 1;
          if (boundary) {
            bsum += cell_loss;
            ++bcount;
          } else {
            isum += cell_loss;
            ++icount;
          }
        }
    }
    stats_.boundary_loss = bcount ? bsum / double(bcount) : 0.0;
    stats_.interior_loss = icount ? isum / double(icount) : 0.0;

    // 4: encode tick-t latents, deliver at t+1
    last_frame_ = MessageFrame{};
    if (comm_active()) {
      RoutedMessages routed = route(topo_, last_latents_, books_, t);
      last_frame_ = routed.frame;
      consumed_ = pending_;
      pending_ = routed.frame;
      slots_ = std::move(routed.slots);
    }

    // 5: periodic codebook co-adaptation
    if (comm_active() && cfg_.comm.codebook_period > 0 && t > 0 &&
        t % cfg_.comm.codebook_period == 0 && latents_.size() > 0) {
      adapt_codebooks(t);
    }

    // 6: metric windows
    if (latents_.capacity > 0) {
      double* dst = latents_.push();
      const int d = cfg_.agents.latent_dim;
      for (int a = 0; a < n; ++a)
        std::copy(last_latents_[size_t(a)].begin(), last_latents_[size_t(a)].end(),
                  dst + size_t(a) * d);
      if (!disc_.calibrated() && cfg_.metrics.enabled &&
          latents_.size() >= cfg_.metrics.window) {
        disc_.calibrate(std::span<const double>(latents_.data),
                        latents_.size() * n, cfg_.agents.latent_dim);
      }
    }
    if (cfg_.metrics.enabled) {
      if (comm_active() && !last_frame_.edges.empty()) {
        int32_t* sdst = symbols_.push();
        std::fill(sdst, sdst + n, -1);
        for (auto [f, to, sym] : last_frame_.edges) sdst[f] = sym;
        *targets_.push() = next.at(target_cell_.first, target_cell_.second);
        last_target_ = next.at(target_cell_.first, target_cell_.second);
        if (disc_.calibrated() && channel_.capacity > 0) {
          int8_t* cdst = channel_.push();
          const int d = cfg_.agents.latent_dim;
          const auto edges = topo_.edges();
          for (int e = 0; e < int(edges.size()); ++e) {
            const auto bins_x = disc_.discretize(last_latents_[size_t(edges[size_t(e)].from)]);
            const auto rec = books_[size_t(edges[size_t(e)].to)].decode(
                symbol_of(last_frame_, edges[size_t(e)].from));
            const auto bins_y = disc_.discretize(rec);
            for (int k = 0; k < d; ++k) {
              cdst[size_t(e) * 2 * d + k] = int8_t(bins_x[size_t(k)]);
              cdst[size_t(e) * 2 * d + d + k] = int8_t(bins_y[size_t(k)]);
            }
          }
        }
      }
      double* idst = inputs_.push();
      for (int a = 0; a < n; ++a) {
        double* p = idst + size_t(a) * input_len_;
        std::copy(inputs[size_t(a)].view.begin(), inputs[size_t(a)].view.end(), p);
        std::copy(inputs[size_t(a)].msgs.begin(), inputs[size_t(a)].msgs.end(),
                  p + inputs[size_t(a)].view.size());
      }
    }

    grid_ = std::move(next);
  }

  void adapt_codebooks(int64_t t) {
    const int n = agent_count();
    const int d = cfg_.agents.latent_dim;
    const int count = latents_.size();
    std::vector<double> buf(size_t(count) * d);
    for (int a = 0; a < n; ++a) {
      for (int i = 0; i < count; ++i) {
        const double* src = latents_.at(i) + size_t(a) * d;
        std::copy(src, src + d, buf.begin() + size_t(i) * d);
      }
      Rng reseed(cfg_.run.seed, stream::kReseed, uint64_t(a), uint64_t(t));
      vq_step(books_[size_t(a)], buf, count, cfg_.comm.vq_rate, reseed);
    }
    // decoder rows follow the receiving agent's loss gradient for the
    // symbols actually consumed this tick
    if (consumed_.tick >= 0 && cfg_.comm.decoder_lr > 0.0) {
      for (auto [from, to, sym] : consumed_.edges) {
        const int slot = topo_.slot_of(from, to);
        if (slot < 0 || msg_grads_[size_t(to)].empty()) continue;
        std::span<const double> g(msg_grads_[size_t(to)].data() + size_t(slot) * d,
                                  size_t(d));
        decoder_grad_step(books_[size_t(to)], sym, g, cfg_.comm.decoder_lr);
      }
    }
  }

  static int symbol_of(const MessageFrame& frame, int from) {
    for (auto [f, t, s] : frame.edges)
      if (f == from) return s;
    return 0;
  }

  std::vector<uint8_t> observe_region(const Grid& g, const TileRect& r) const {
    std::vector<uint8_t> obs(size_t(r.w) * r.h);
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x)
        obs[size_t(y) * r.w + x] = g.at(r.x0 + x, r.y0 + y);
    return obs;
  }

  std::vector<std::vector<std::vector<double>>> latent_window() const {
    const int n = agent_count(), d = cfg_.agents.latent_dim;
    std::vector<std::vector<std::vector<double>>> w(size_t(latents_.size()));
    for (int i = 0; i < latents_.size(); ++i) {
      w[size_t(i)].resize(size_t(n));
      const double* src = latents_.at(i);
      for (int a = 0; a < n; ++a)
        w[size_t(i)][size_t(a)].assign(src + size_t(a) * d, src + size_t(a + 1) * d);
    }
    return w;
  }

  std::vector<std::vector<double>> latent_trajectory(int agent) const {
    const int d = cfg_.agents.latent_dim;
    std::vector<std::vector<double>> traj(size_t(latents_.size()));
    for (int i = 0; i < latents_.size(); ++i) {
      const double* src = latents_.at(i) + size_t(agent) * d;
      traj[size_t(i)].assign(src, src + d);
    }
    return traj;
  }

  std::vector<AgentInput> input_batch(int agent) const {
    const int view_len = input_len_ - topo_.slots(agent) * cfg_.agents.latent_dim;
    std::vector<AgentInput> batch(size_t(inputs_.size()));
    for (int i = 0; i < inputs_.size(); ++i) {
      const double* p = inputs_.at(i) + size_t(agent) * input_len_;
      batch[size_t(i)].view.assign(p, p + view_len);
      batch[size_t(i)].msgs.assign(p + view_len, p + input_len_);
    }
    return batch;
  }

  void replace_pending_symbol(int from, int to, int symbol) {
    if (symbol < 0 || symbol >= books_[size_t(from)].alphabet())
      throw contract_violation("replace_pending_symbol: symbol out of range");
    for (auto& [f, t, s] : pending_.edges) {
      if (f == from && t == to) {
        s = symbol;
        const int slot = topo_.slot_of(from, to);
        const auto rec = books_[size_t(to)].decode(symbol);
        const int d = cfg_.agents.latent_dim;
        std::copy(rec.begin(), rec.end(),
                  slots_[size_t(to)].begin() + size_t(slot) * d);
        return;
      }
    }
  }

  std::pair<int, int> resolve_target() const {
    if (cfg_.metrics.synergy_target == "center")
      return {grid_.width / 2, grid_.height / 2};
    const auto& s = cfg_.metrics.synergy_target;
    const size_t comma = s.find(',');
    if (comma == std::string::npos)
      throw config_error("metrics.synergy_target must be center or x,y");
    const int x = int(detail_parse_int(s.substr(0, comma)));
    const int y = int(detail_parse_int(s.substr(comma + 1)));
    if (x < 0 || x >= grid_.width || y < 0 || y >= grid_.height)
      throw config_error("metrics.synergy_target out of range");
    return {x, y};
  }

  std::vector<int> resolve_pool() const {
    // agents nearest the target cell, toroidal tile-center distance,
    // ties by id
    std::vector<std::pair<double, int>> order;
    for (int a = 0; a < agent_count(); ++a) {
      const TileRect& r = agents_[size_t(a)].region();
      const double cx = r.x0 + r.w / 2.0, cy = r.y0 + r.h / 2.0;
      double dx = std::abs(cx - target_cell_.first);
      double dy = std::abs(cy - target_cell_.second);
      dx = std::min(dx, grid_.width - dx);
      dy = std::min(dy, grid_.height - dy);
      order.emplace_back(dx * dx + dy * dy, a);
    }
    std::sort(order.begin(), order.end());
    std::vector<int> pool;
    for (int i = 0; i < std::min<int>(cfg_.metrics.synergy_agents, int(order.size())); ++i)
      pool.push_back(order[size_t(i)].second);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  std::optional<std::pair<int, int>> resolve_efficacy_edge() const {
    const auto edges = topo_.edges();
    if (cfg_.metrics.efficacy_edge == "first") {
      if (edges.empty()) return std::nullopt;
      return std::make_pair(edges[0].from, edges[0].to);
    }
    const auto& s = cfg_.metrics.efficacy_edge;
    const size_t comma = s.find(',');
    if (comma == std::string::npos)
      throw config_error("metrics.efficacy_edge must be first or i,j");
    const int f = int(detail_parse_int(s.substr(0, comma)));
    const int t = int(detail_parse_int(s.substr(comma + 1)));
    if (!topo_.has_edge(f, t))
      throw config_error("metrics.efficacy_edge names a missing edge");
    return std::make_pair(f, t);
  }

  static int64_t detail_parse_int(const std::string& s) {
    int64_t out = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw config_error("expected an integer, got '" + s + "'");
    return out;
  }

  template <typename Fn>
  static void enumerate_subsets(int n, int max_size, std::vector<int>& cur,
                                const Fn& fn, int start = 0) {
    if (int(cur.size()) >= 2) fn(cur);
    if (int(cur.size()) == max_size) return;
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      enumerate_subsets(n, max_size, cur, fn, i + 1);
      cur.pop_back();
    }
  }

  SimConfig cfg_;
  Grid grid_;
  int tiles_x_ = 0, tiles_y_ = 0;
  CommTopology topo_;
  std::vector<AgentModel> agents_;
  std::vector<Codebook> books_;
  std::vector<std::vector<double>> slots_;
  MessageFrame pending_;   // routed this tick, consumed next tick
  MessageFrame consumed_;  // consumed this tick (decoder adaptation)
  MessageFrame last_frame_;
  std::vector<std::vector<double>> last_probs_;
  std::vector<std::vector<double>> last_latents_;
  std::vector<std::vector<double>> msg_grads_;
  uint8_t last_target_ = 0;
  TickStats stats_;

  Discretizer disc_;
  detail::Ring<double> latents_;
  detail::Ring<int32_t> symbols_;
  detail::Ring<uint8_t> targets_;
  detail::Ring<int8_t> channel_;
  detail::Ring<double> inputs_;
  int input_len_ = 0;
  std::pair<int, int> target_cell_{0, 0};
  std::vector<int> synergy_pool_;
  std::optional<std::pair<int, int>> efficacy_edge_;
};

}  // namespace chorus
