#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/grid.hpp"
#include "chorus/net.hpp"

namespace chorus {

struct TileRect {
  int x0 = 0, y0 = 0, w = 0, h = 0;
  bool operator==(const TileRect&) const = default;
};

// View footprint of a tile: the tile's own cells plus the four
// edge-adjacent halo strips, in row-major order of the enclosing
// (w+2)x(h+2) box. The diagonal corner neighbours are not part of the
// view, so a tile-corner cell has one next-state dependency it cannot
// see; that bit can only arrive through messages.
inline std::vector<std::pair<int, int>> view_coords(const TileRect& r) {
  std::vector<std::pair<int, int>> out;
  out.reserve(size_t(r.w) * r.h + 2 * r.w + 2 * r.h);
  for (int y = r.y0 - 1; y <= r.y0 + r.h; ++y)
    for (int x = r.x0 - 1; x <= r.x0 + r.w; ++x) {
      const bool corner = (x == r.x0 - 1 || x == r.x0 + r.w) &&
                          (y == r.y0 - 1 || y == r.y0 + r.h);
      if (!corner) out.emplace_back(x, y);
    }
  return out;
}

inline std::vector<double> extract_view(const Grid& g, const TileRect& r) {
  std::vector<double> v;
  const auto coords = view_coords(r);
  v.reserve(coords.size());
  for (auto [x, y] : coords) v.push_back(double(g.at_wrapped(x, y)));
  return v;
}

// Tile cells whose Moore neighbourhood crosses the tile boundary
// (the tile's edge ring), as indices into the row-major tile ordering.
inline std::vector<int> boundary_cell_indices(const TileRect& r) {
  std::vector<int> out;
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      if (x == 0 || y == 0 || x == r.w - 1 || y == r.h - 1)
        out.push_back(y * r.w + x);
  return out;
}

struct AgentInput {
  std::vector<double> view;
  std::vector<double> msgs;  // concatenated decoded message slots
};

struct Prediction {
  std::vector<double> probs;  // per tile cell, clamped to (eps, 1-eps)
};

// Mean per-cell cross-entropy, natural log.
inline double bce_loss(std::span<const double> probs,
                       std::span<const uint8_t> observed) {
  if (probs.size() != observed.size())
    throw contract_violation("bce_loss: length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i)
    acc -= observed[i] ? std::log(probs[i]) : std::log(1.0 - probs[i]);
  return acc / double(probs.size());
}

inline double bce_loss(const Prediction& p, std::span<const uint8_t> observed) {
  return bce_loss(std::span<const double>(p.probs), observed);
}

struct AgentConfig {
  int hidden = 32;
  int latent_dim = 32;
  double lr = 0.05;
  double momentum = 0.0;
  bool attention = false;
  int attn_embed = 8;
};

struct UpdateResult {
  double loss = 0.0;
  bool applied = false;
  std::string diagnostic;           // set when the step was skipped
  std::vector<double> msg_gradient; // dL/d(message slots)
};

// One predictive unit owning a tile. Online SGD against the observed next
// tile state; the latent handed to the communication layer is the second
// hidden activation of the last forward pass.
class AgentModel {
 public:
  AgentModel() = default;

  AgentModel(int id, TileRect region, const AgentConfig& cfg, int msg_slots,
             int slot_dim, uint64_t seed)
      : id_(id), region_(region), cfg_(cfg) {
    NetSpec spec;
    spec.view_dim = int(view_coords(region).size());
    spec.msg_dim = msg_slots * slot_dim;
    spec.hidden1 = cfg.hidden;
    spec.hidden2 = cfg.latent_dim;
    spec.out_dim = region.w * region.h;
    spec.attention = cfg.attention;
    spec.attn_embed = cfg.attn_embed;
    net_ = Net(spec, seed, uint64_t(id));
    velocity_.assign(size_t(spec.param_count()), 0.0);
  }

  int id() const { return id_; }
  const TileRect& region() const { return region_; }
  const AgentConfig& config() const { return cfg_; }
  Net& net() { return net_; }
  const Net& net() const { return net_; }
  std::vector<double>& velocity() { return velocity_; }
  const std::vector<double>& velocity() const { return velocity_; }

  Prediction predict(const AgentInput& in) {
    cache_ = net_.forward(in.view, in.msgs);
    return Prediction{cache_.probs};
  }

  const std::vector<double>& last_latent() const { return cache_.h2; }
  const Forward& last_forward() const { return cache_; }

  std::vector<double> latent(const AgentInput& in) {
    predict(in);
    return cache_.h2;
  }

  // One SGD step on the cached forward pass. Non-finite gradients skip the
  // step and report a diagnostic instead of poisoning the parameters.
  UpdateResult update_cached(std::span<const uint8_t> observed, double lr) {
    if (cache_.probs.empty())
      throw contract_violation("update_cached: no forward pass cached");
    if (int(observed.size()) != net_.spec().out_dim)
      throw contract_violation("update_cached: observed length mismatch");
    UpdateResult res;
    res.loss = bce_loss(cache_.probs, observed);
    const int n = net_.spec().out_dim;
    std::vector<double> dlogits(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      dlogits[size_t(i)] = (cache_.probs_raw[size_t(i)] - double(observed[size_t(i)])) / double(n);
    Gradients g = net_.backward(cache_, dlogits);
    res.msg_gradient = std::move(g.msgs);
    for (double gv : g.params)
      if (!std::isfinite(gv)) {
        res.diagnostic = "agent " + format_int(id_) + ": non-finite gradient, step skipped";
        return res;
      }
    if (lr > 0.0) {
      auto& p = net_.params();
      for (size_t i = 0; i < p.size(); ++i) {
        velocity_[i] = cfg_.momentum * velocity_[i] + g.params[i];
        p[i] -= lr * velocity_[i];
      }
    }
    res.applied = true;
    return res;
  }

  UpdateResult update(const AgentInput& in, std::span<const uint8_t> observed,
                      double lr) {
    predict(in);
    return update_cached(observed, lr);
  }

  bool operator==(const AgentModel& o) const {
    return id_ == o.id_ && region_ == o.region_ && net_ == o.net_ &&
           velocity_ == o.velocity_;
  }

 private:
  int id_ = 0;
  TileRect region_;
  AgentConfig cfg_;
  Net net_;
  std::vector<double> velocity_;
  Forward cache_;
};

}  // namespace chorus
