#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/rng.hpp"

namespace chorus {

// Continuous-valued lattice state.
struct FieldState {
  std::vector<double> values;
  int64_t tick = 0;

  bool operator==(const FieldState&) const = default;
};

enum class PotentialKind { quadratic, double_well, coupled_lattice };

// quadratic:        U = sum_i a/2 x_i^2
// double_well:      U = sum_i a (x_i^2 - b)^2
// coupled_lattice:  double-well on-site plus coupling/2 * sum_i (x_i - x_{i+1})^2
//                   with toroidal neighbours
struct PotentialSpec {
  PotentialKind kind = PotentialKind::quadratic;
  double a = 1.0;
  double b = 1.0;
  double coupling = 0.0;
};

inline double potential(const PotentialSpec& p, std::span<const double> x) {
  double u = 0.0;
  switch (p.kind) {
    case PotentialKind::quadratic:
      for (double v : x) u += 0.5 * p.a * v * v;
      break;
    case PotentialKind::double_well:
      for (double v : x) {
        const double d = v * v - p.b;
        u += p.a * d * d;
      }
      break;
    case PotentialKind::coupled_lattice: {
      const size_t n = x.size();
      for (size_t i = 0; i < n; ++i) {
        const double d = x[i] * x[i] - p.b;
        u += p.a * d * d;
        const double diff = x[i] - x[(i + 1) % n];
        u += 0.5 * p.coupling * diff * diff;
      }
      break;
    }
  }
  return u;
}

inline std::vector<double> gradient(const PotentialSpec& p,
                                    std::span<const double> x) {
  const size_t n = x.size();
  std::vector<double> g(n, 0.0);
  switch (p.kind) {
    case PotentialKind::quadratic:
      for (size_t i = 0; i < n; ++i) g[i] = p.a * x[i];
      break;
    case PotentialKind::double_well:
      for (size_t i = 0; i < n; ++i)
        g[i] = 4.0 * p.a * x[i] * (x[i] * x[i] - p.b);
      break;
    case PotentialKind::coupled_lattice:
      for (size_t i = 0; i < n; ++i) {
        g[i] = 4.0 * p.a * x[i] * (x[i] * x[i] - p.b);
        const double left = x[(i + n - 1) % n];
        const double right = x[(i + 1) % n];
        g[i] += p.coupling * (2.0 * x[i] - left - right);
      }
      break;
  }
  return g;
}

struct LangevinParams {
  double eta = 0.05;   // step size
  double beta = 1.0;   // inverse temperature
  uint64_t seed = 1;
  bool noise = true;   // test hook: disable the stochastic term
};

// Euler-Maruyama update x' = x - eta * grad U(x) + sqrt(2 eta / beta) * xi,
// xi standard normal, one independent stream per (seed, site, tick).
inline FieldState langevin_step(const FieldState& f, const PotentialSpec& pot,
                                const LangevinParams& prm) {
  if (prm.eta < 0.0) throw contract_violation("eta must be >= 0");
  if (prm.beta <= 0.0) throw contract_violation("beta must be > 0");
  const auto grad = gradient(pot, f.values);
  for (size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw std::runtime_error("langevin_step: non-finite gradient at site " +
                               format_int(int64_t(i)) + " (value " +
                               format_double(f.values[i]) + ")");
  FieldState out;
  out.tick = f.tick + 1;
  out.values.resize(f.values.size());
  const double amp = prm.noise ? std::sqrt(2.0 * prm.eta / prm.beta) : 0.0;
  for (size_t i = 0; i < f.values.size(); ++i) {
    double xi = 0.0;
    if (amp != 0.0)
      xi = Rng(prm.seed, stream::kNoise, uint64_t(i), uint64_t(f.tick)).gaussian();
    out.values[i] = f.values[i] - prm.eta * grad[i] + amp * xi;
  }
  return out;
}

namespace detail {

// Direction-independent summation: positives and negatives are sorted and
// folded separately, so reversing the trajectory negates the result
// bit-for-bit.
inline double signed_sum(std::vector<double>& terms) {
  std::vector<double> pos, neg;
  for (double t : terms) {
    if (t > 0.0) pos.push_back(t);
    else if (t < 0.0) neg.push_back(-t);
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  double p = 0.0, n = 0.0;
  for (double v : pos) p += v;
  for (double v : neg) n += v;
  return p - n;
}

}  // namespace detail

// Log-ratio of forward and time-reversed path probabilities under the
// Euler-Maruyama Gaussian kernel (mean x - eta grad U(x), variance
// 2 eta / beta per site). Units of k_B with k_B = 1. Exactly antisymmetric
// under trajectory reversal.
inline double entropy_production(std::span<const FieldState> traj,
                                 const PotentialSpec& pot,
                                 const LangevinParams& prm) {
  if (traj.size() < 2)
    throw contract_violation("entropy_production: need at least 2 states");
  if (prm.eta <= 0.0 || prm.beta <= 0.0)
    throw contract_violation("entropy_production: eta and beta must be > 0");
  const size_t sites = traj[0].values.size();
  for (const auto& f : traj)
    if (f.values.size() != sites)
      throw contract_violation("entropy_production: mismatched field sizes");

  const double scale = prm.beta / (4.0 * prm.eta);
  std::vector<double> terms;
  terms.reserve(traj.size() - 1);
  for (size_t t = 0; t + 1 < traj.size(); ++t) {
    const auto& a = traj[t].values;
    const auto& b = traj[t + 1].values;
    const auto ga = gradient(pot, a);
    const auto gb = gradient(pot, b);
    double rev = 0.0, fwd = 0.0;
    for (size_t i = 0; i < sites; ++i) {
      const double r = a[i] - b[i] + prm.eta * gb[i];
      const double f = b[i] - a[i] + prm.eta * ga[i];
      rev += r * r;
      fwd += f * f;
    }
    terms.push_back(scale * (rev - fwd));
  }
  return detail::signed_sum(terms);
}

// Diagnostic split: the internal part is the Shannon entropy change of the
// per-site value histogram (`bins` equal-width bins over the trajectory's
// global range), the external part is the remainder.
struct EntropyBreakdown {
  double total = 0.0;
  double internal = 0.0;
  double external = 0.0;
};

inline EntropyBreakdown entropy_breakdown(std::span<const FieldState> traj,
                                          const PotentialSpec& pot,
                                          const LangevinParams& prm,
                                          int bins = 32) {
  EntropyBreakdown out;
  out.total = entropy_production(traj, pot, prm);
  double lo = traj[0].values[0], hi = lo;
  for (const auto& f : traj)
    for (double v : f.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi <= lo) hi = lo + 1.0;
  auto hist_entropy = [&](const std::vector<double>& vals) {
    std::vector<int64_t> h(size_t(bins), 0);
    for (double v : vals) {
      int b = int((v - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++h[size_t(b)];
    }
    double e = 0.0;
    for (int64_t c : h)
      if (c > 0) {
        const double p = double(c) / double(vals.size());
        e -= p * std::log(p);
      }
    return e;
  };
  out.internal = hist_entropy(traj.back().values) - hist_entropy(traj.front().values);
  out.external = out.total - out.internal;
  return out;
}

// TSV: tick, site, value; entropy report as '#'-prefixed footer records.
inline void write_trajectory_tsv(std::ostream& os,
                                 std::span<const FieldState> traj,
                                 const PotentialSpec& pot,
                                 const LangevinParams& prm) {
  os << "tick\tsite\tvalue\n";
  for (const auto& f : traj)
    for (size_t i = 0; i < f.values.size(); ++i)
      os << f.tick << '\t' << i << '\t' << format_double(f.values[i]) << '\n';
  if (traj.size() >= 2) {
    const auto br = entropy_breakdown(traj, pot, prm);
    os << "# entropy_total\t" << format_double(br.total) << '\n';
    os << "# entropy_internal\t" << format_double(br.internal) << '\n';
    os << "# entropy_external\t" << format_double(br.external) << '\n';
  }
}

}  // namespace chorus
