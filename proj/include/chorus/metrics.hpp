#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chorus/agent.hpp"
#include "chorus/common.hpp"
#include "chorus/info.hpp"

namespace chorus {

// Total correlation of the discretized per-agent latents, summed over the
// given disjoint agent groups: sum_i H(x_i) - H(x_group) within each
// group, bits. Groups keep the joint alphabet tractable; callers cap the
// group size.
//
// window: [tick][agent][dim]
inline std::optional<double> integration_phi(
    const std::vector<std::vector<std::vector<double>>>& window,
    const Discretizer& disc, const std::vector<std::vector<int>>& groups,
    int min_samples) {
  const int t = int(window.size());
  if (t < min_samples || t == 0) return std::nullopt;
  const int n_agents = int(window[0].size());

  // per-agent symbol streams
  std::vector<std::vector<int64_t>> sym(static_cast<size_t>(n_agents));
  std::vector<SymbolTable> tables(static_cast<size_t>(n_agents));
  for (int a = 0; a < n_agents; ++a) {
    sym[size_t(a)].resize(size_t(t));
    for (int i = 0; i < t; ++i)
      sym[size_t(a)][size_t(i)] =
          tables[size_t(a)].id_of(disc.discretize(window[size_t(i)][size_t(a)]));
  }

  double phi = 0.0;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    double marginals = 0.0;
    SymbolTable joint_tab;
    std::vector<int64_t> joint(static_cast<size_t>(t));
    for (int i = 0; i < t; ++i) {
      std::vector<int> key;
      key.reserve(group.size());
      for (int a : group) key.push_back(int(sym[size_t(a)][size_t(i)]));
      joint[size_t(i)] = joint_tab.id_of(key);
    }
    for (int a : group) marginals += entropy_bits(sym[size_t(a)]);
    phi += marginals - entropy_bits(joint);
  }
  return phi;
}

inline std::vector<std::vector<int>> phi_groups(int n_agents, int max_group) {
  std::vector<std::vector<int>> groups;
  for (int a = 0; a < n_agents; a += max_group) {
    std::vector<int> g;
    for (int b = a; b < std::min(n_agents, a + max_group); ++b) g.push_back(b);
    groups.push_back(std::move(g));
  }
  return groups;
}

// Gradient share of the message slots in the mean output logit:
// R = G_m / (G_m + G_s), with G_m and G_s the batch means of the L1 norm
// of d(mean logit)/d(messages) and d(mean logit)/d(view). Zero when both
// paths are dead. Invariant under positive rescaling of the logits.
inline double reflexivity(const AgentModel& agent,
                          std::span<const AgentInput> batch) {
  if (batch.empty()) return 0.0;
  const int out = agent.net().spec().out_dim;
  std::vector<double> dlogits(size_t(out), 1.0 / double(out));
  double gm = 0.0, gs = 0.0;
  for (const auto& in : batch) {
    const Forward f = agent.net().forward(in.view, in.msgs);
    const Gradients g = agent.net().backward(f, dlogits);
    double m = 0.0, s = 0.0;
    for (double v : g.msgs) m += std::abs(v);
    for (double v : g.view) s += std::abs(v);
    gm += m;
    gs += s;
  }
  gm /= double(batch.size());
  gs /= double(batch.size());
  if (gm + gs == 0.0) return 0.0;
  return gm / (gm + gs);
}

// Mean over latent dimensions of the Pearson autocorrelation at the given
// lag. Dimensions that are exactly constant over either slice count as
// perfectly persistent (1). Lag 0 is 1 by definition.
//
// traj: [tick][dim]
inline std::optional<double> temporal_persistence(
    const std::vector<std::vector<double>>& traj, int lag) {
  if (lag < 0) throw contract_violation("temporal_persistence: negative lag");
  const int t = int(traj.size());
  if (t <= lag) return std::nullopt;
  if (lag == 0) return 1.0;
  const int n = t - lag;
  if (n < 2) return std::nullopt;
  const int dims = int(traj[0].size());
  double acc = 0.0;
  for (int d = 0; d < dims; ++d) {
    bool const_a = true, const_b = true;
    for (int i = 1; i < n; ++i) {
      const_a &= traj[size_t(i)][size_t(d)] == traj[0][size_t(d)];
      const_b &= traj[size_t(i + lag)][size_t(d)] == traj[size_t(lag)][size_t(d)];
    }
    if (const_a || const_b) {
      acc += 1.0;
      continue;
    }
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < n; ++i) {
      ma += traj[size_t(i)][size_t(d)];
      mb += traj[size_t(i + lag)][size_t(d)];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (int i = 0; i < n; ++i) {
      const double da = traj[size_t(i)][size_t(d)] - ma;
      const double db = traj[size_t(i + lag)][size_t(d)] - mb;
      cov += da * db;
      va += da * da;
      vb += db * db;
    }
    acc += cov / std::sqrt(va * vb);
  }
  return acc / double(dims);
}

// ---- synergy ----

// w(sigma) = max(0, I(S; X_sigma) - max over proper nonempty subsets tau
// of I(S; X_tau)): the information the subset carries about the target
// beyond its best proper part.

namespace detail {

inline double mi_subset(std::span<const int64_t> target,
                        const std::vector<std::vector<int64_t>>& vars,
                        std::span<const int> subset) {
  const size_t t = target.size();
  SymbolTable tab;
  std::vector<int64_t> joint(t);
  for (size_t i = 0; i < t; ++i) {
    std::vector<int> key;
    key.reserve(subset.size());
    for (int v : subset) key.push_back(int(vars[size_t(v)][i]));
    joint[i] = tab.id_of(key);
  }
  return mi_bits(joint, target);
}

inline void proper_subsets(std::span<const int> set,
                           std::vector<std::vector<int>>& out) {
  const int n = int(set.size());
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    std::vector<int> sub;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) sub.push_back(set[size_t(i)]);
    out.push_back(std::move(sub));
  }
}

}  // namespace detail

// target[i] paired with vars[v][i]; subset holds indices into vars.
inline double synergy_weight(std::span<const int> subset,
                             std::span<const int64_t> target,
                             const std::vector<std::vector<int64_t>>& vars) {
  if (subset.size() < 2)
    throw contract_violation("synergy_weight: subsets start at pairs");
  for (int v : subset)
    if (v < 0 || v >= int(vars.size()) || vars[size_t(v)].size() != target.size())
      throw contract_violation("synergy_weight: bad variable index");
  const double whole = detail::mi_subset(target, vars, subset);
  std::vector<std::vector<int>> subs;
  detail::proper_subsets(subset, subs);
  double best = 0.0;
  for (const auto& s : subs)
    best = std::max(best, detail::mi_subset(target, vars, s));
  return std::max(0.0, whole - best);
}

// Exact-distribution variant: outcomes[(s, x_1..x_k)] = probability.
inline double synergy_weight_exact(
    const std::map<std::vector<int>, double>& joint, int k) {
  // expand the joint into weighted samples over a common index space
  std::vector<int64_t> target;
  std::vector<std::vector<int64_t>> vars(static_cast<size_t>(k));
  std::vector<double> weights;
  for (const auto& [key, p] : joint) {
    if (int(key.size()) != k + 1)
      throw contract_violation("synergy_weight_exact: key arity mismatch");
    target.push_back(key[0]);
    for (int v = 0; v < k; ++v) vars[size_t(v)].push_back(key[size_t(v) + 1]);
    weights.push_back(p);
  }
  auto weighted_mi = [&](std::span<const int> subset) {
    std::map<std::vector<int64_t>, double> pj;
    std::map<std::vector<int64_t>, double> px;
    std::map<int64_t, double> ps;
    for (size_t i = 0; i < weights.size(); ++i) {
      std::vector<int64_t> x;
      for (int v : subset) x.push_back(vars[size_t(v)][i]);
      std::vector<int64_t> j = x;
      j.push_back(target[i]);
      pj[j] += weights[i];
      px[x] += weights[i];
      ps[target[i]] += weights[i];
    }
    double mi = 0.0;
    for (const auto& [j, p] : pj) {
      if (p <= 0.0) continue;
      std::vector<int64_t> x(j.begin(), j.end() - 1);
      mi += p * std::log2(p / (px[x] * ps[j.back()]));
    }
    return mi;
  };
  std::vector<int> all(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) all[size_t(i)] = i;
  const double whole = weighted_mi(all);
  std::vector<std::vector<int>> subs;
  detail::proper_subsets(all, subs);
  double best = 0.0;
  for (const auto& s : subs) best = std::max(best, weighted_mi(s));
  return std::max(0.0, whole - best);
}

// ---- channel mutual information ----

// Plug-in MI between a sender's discretized latents and the receiver's
// discretized reconstructions. Bounded by kappa through the finite
// alphabet regardless of sample count.
inline std::optional<double> channel_mi(
    const std::vector<std::vector<int>>& latent_bins,
    const std::vector<std::vector<int>>& recon_bins, int min_samples) {
  if (latent_bins.size() != recon_bins.size())
    throw contract_violation("channel_mi: sample count mismatch");
  if (int(latent_bins.size()) < min_samples) return std::nullopt;
  SymbolTable tx, ty;
  std::vector<int64_t> xs(latent_bins.size()), ys(recon_bins.size());
  for (size_t i = 0; i < latent_bins.size(); ++i) {
    xs[i] = tx.id_of(latent_bins[i]);
    ys[i] = ty.id_of(recon_bins[i]);
  }
  return mi_bits(xs, ys);
}

// ---- per-window record ----

struct MetricsRecord {
  int64_t tick = 0;
  std::optional<double> phi;
  std::optional<double> r_mean;
  std::vector<std::pair<int, std::optional<double>>> t_persistence;  // per lag
  std::optional<double> e_efficacy;
  double loss_mean = 0.0;
  std::vector<double> per_agent_loss;
  std::optional<double> gamma_mean;
  std::optional<double> gamma_max;
  std::optional<double> coherence;
};

inline std::string metrics_header(const std::vector<int>& lags) {
  std::string h = "tick\tphi\tr_mean";
  for (int lag : lags) h += "\tt_persistence_lag" + format_int(lag);
  h += "\te_efficacy\tloss_mean\tper_agent_loss\tgamma_mean\tgamma_max\tcoherence";
  return h;
}

inline std::string metrics_row(const MetricsRecord& r) {
  auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("na");
  };
  std::string row = format_int(r.tick) + '\t' + cell(r.phi) + '\t' + cell(r.r_mean);
  for (const auto& [lag, v] : r.t_persistence) row += '\t' + cell(v);
  row += '\t' + cell(r.e_efficacy) + '\t' + format_double(r.loss_mean) + '\t';
  for (size_t i = 0; i < r.per_agent_loss.size(); ++i) {
    if (i) row += ',';
    row += format_double(r.per_agent_loss[i]);
  }
  if (r.per_agent_loss.empty()) row += "na";
  row += '\t' + cell(r.gamma_mean) + '\t' + cell(r.gamma_max) + '\t' + cell(r.coherence);
  return row;
}

}  // namespace chorus
