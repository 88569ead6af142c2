#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/network.hpp"
#include "chorus/rng.hpp"

namespace chorus {

// An agent's private code: encoder prototypes over the latent space and a
// decoder row per symbol. The 2^kappa alphabet is the bandwidth limit; a
// message can never carry more than kappa bits.
struct Codebook {
  int owner = 0;
  int kappa = 1;
  int dim = 0;
  std::vector<double> centroids;   // alphabet x dim, row-major
  std::vector<double> decode_map;  // alphabet x dim, row-major

  int alphabet() const { return 1 << kappa; }

  static Codebook init(int owner, int kappa, int dim, uint64_t seed) {
    if (kappa < 1 || kappa > 16)
      throw contract_violation("kappa must be in 1..16");
    Codebook b;
    b.owner = owner;
    b.kappa = kappa;
    b.dim = dim;
    b.centroids.resize(size_t(b.alphabet()) * dim);
    Rng rng(seed, stream::kCodebook, uint64_t(owner));
    for (double& c : b.centroids) c = rng.uniform_in(-1.0, 1.0);
    b.decode_map = b.centroids;  // decode(encode(c)) == c at start
    return b;
  }

  // Nearest centroid by Euclidean distance; ties resolve to the lowest
  // symbol index.
  int encode(std::span<const double> latent) const {
    if (int(latent.size()) != dim)
      throw contract_violation("encode: latent dimension mismatch");
    int best = 0;
    double best_d = 0.0;
    for (int s = 0; s < alphabet(); ++s) {
      double d = 0.0;
      const double* c = centroids.data() + size_t(s) * dim;
      for (int k = 0; k < dim; ++k) {
        const double diff = latent[size_t(k)] - c[k];
        d += diff * diff;
      }
      if (s == 0 || d < best_d) {
        best = s;
        best_d = d;
      }
    }
    return best;
  }

  std::span<const double> decode(int symbol) const {
    if (symbol < 0 || symbol >= alphabet())
      throw contract_violation("decode: symbol out of range");
    return {decode_map.data() + size_t(symbol) * dim, size_t(dim)};
  }

  bool operator==(const Codebook&) const = default;
};

// Batch VQ step over a window of latents: every centroid moves toward the
// mean of the latents assigned to it by `rate`. Empty clusters are
// re-seeded to a random latent from the window.
inline void vq_step(Codebook& book, std::span<const double> latents, int count,
                    double rate, Rng& reseed) {
  if (count <= 0 || rate == 0.0) return;
  const int d = book.dim, a = book.alphabet();
  std::vector<double> sums(size_t(a) * d, 0.0);
  std::vector<int64_t> ns(size_t(a), 0);
  for (int i = 0; i < count; ++i) {
    std::span<const double> x(latents.data() + size_t(i) * d, size_t(d));
    const int s = book.encode(x);
    ++ns[size_t(s)];
    for (int k = 0; k < d; ++k) sums[size_t(s) * d + k] += x[size_t(k)];
  }
  for (int s = 0; s < a; ++s) {
    double* c = book.centroids.data() + size_t(s) * d;
    if (ns[size_t(s)] > 0) {
      for (int k = 0; k < d; ++k) {
        const double mean = sums[size_t(s) * d + k] / double(ns[size_t(s)]);
        c[k] += rate * (mean - c[k]);
      }
    } else {
      const int pick = int(reseed.below(uint64_t(count)));
      for (int k = 0; k < d; ++k) c[k] = latents[size_t(pick) * d + k];
    }
  }
}

// Mean squared distance of window latents to their assigned centroid.
inline double vq_quantization_error(const Codebook& book,
                                    std::span<const double> latents,
                                    int count) {
  if (count <= 0) return 0.0;
  const int d = book.dim;
  double acc = 0.0;
  for (int i = 0; i < count; ++i) {
    std::span<const double> x(latents.data() + size_t(i) * d, size_t(d));
    const int s = book.encode(x);
    const double* c = book.centroids.data() + size_t(s) * d;
    for (int k = 0; k < d; ++k) {
      const double diff = x[size_t(k)] - c[k];
      acc += diff * diff;
    }
  }
  return acc / double(count);
}

inline void decoder_grad_step(Codebook& book, int symbol,
                              std::span<const double> grad, double lr) {
  if (symbol < 0 || symbol >= book.alphabet())
    throw contract_violation("decoder_grad_step: symbol out of range");
  if (int(grad.size()) != book.dim)
    throw contract_violation("decoder_grad_step: gradient dimension mismatch");
  double* row = book.decode_map.data() + size_t(symbol) * book.dim;
  for (int k = 0; k < book.dim; ++k) row[k] -= lr * grad[size_t(k)];
}

// Routed messages for one tick: the frame of symbols plus the decoded
// per-receiver slot vectors. Slots default to zero; encoding reads the
// given latents only, so the result is independent of edge order.
struct RoutedMessages {
  MessageFrame frame;
  std::vector<std::vector<double>> slots;  // [agent] -> slots(agent) * dim
};

inline RoutedMessages route(const CommTopology& topo,
                            const std::vector<std::vector<double>>& latents,
                            std::span<const Codebook> books, int64_t tick) {
  if (int(latents.size()) != topo.n || int(books.size()) != topo.n)
    throw contract_violation("route: latent/codebook count mismatch");
  RoutedMessages out;
  out.frame.tick = tick;
  out.slots.resize(size_t(topo.n));
  const int d = topo.n > 0 ? books[0].dim : 0;
  for (int a = 0; a < topo.n; ++a)
    out.slots[size_t(a)].assign(size_t(topo.slots(a)) * d, 0.0);

  std::vector<int> symbol_of(size_t(topo.n), -1);  // one broadcast per sender
  for (const auto& e : topo.edges()) {
    if (symbol_of[size_t(e.from)] < 0)
      symbol_of[size_t(e.from)] = books[size_t(e.from)].encode(latents[size_t(e.from)]);
    const int sym = symbol_of[size_t(e.from)];
    const auto recon = books[size_t(e.to)].decode(sym);
    std::copy(recon.begin(), recon.end(),
              out.slots[size_t(e.to)].begin() + size_t(e.slot) * d);
    out.frame.edges.emplace_back(e.from, e.to, sym);
  }
  return out;
}

// Relative drift of a latent transported around a codebook cycle: each hop
// s -> r maps x to decode_r(encode_s(x)); the last hop returns to the
// cycle's first agent. Invariant under a common orthogonal change of basis.
inline double curvature(const CommTopology& topo,
                        std::span<const Codebook> books,
                        std::span<const int> cycle,
                        const std::vector<std::vector<double>>& samples) {
  if (cycle.size() < 2)
    throw contract_violation("curvature: cycle length must be >= 2");
  const size_t m = cycle.size();
  for (size_t i = 0; i < m; ++i) {
    const int from = cycle[i], to = cycle[(i + 1) % m];
    if (!topo.has_edge(from, to))
      throw contract_violation("curvature: missing edge " + format_int(from) +
                               " -> " + format_int(to));
  }
  if (samples.empty()) return 0.0;
  constexpr double kEps = 1e-12;
  double acc = 0.0;
  for (const auto& x0 : samples) {
    std::vector<double> x = x0;
    for (size_t i = 0; i < m; ++i) {
      const int from = cycle[i], to = cycle[(i + 1) % m];
      const int sym = books[size_t(from)].encode(x);
      const auto rec = books[size_t(to)].decode(sym);
      x.assign(rec.begin(), rec.end());
    }
    double drift = 0.0, norm = 0.0;
    for (size_t k = 0; k < x.size(); ++k) {
      const double d = x0[k] - x[k];
      drift += d * d;
      norm += x0[k] * x0[k];
    }
    acc += std::sqrt(drift) / (std::sqrt(norm) + kEps);
  }
  return acc / double(samples.size());
}

}  // namespace chorus
