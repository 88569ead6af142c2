#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "chorus/common.hpp"

namespace chorus {

enum class BinStrategy { uniform, quantile };

// Per-dimension scalar binning calibrated once from a sample window.
// Out-of-range values clamp to the edge bins. Quantile edges are the
// k*n/bins order statistics, so degenerate dimensions collapse to a
// single occupied bin.
struct Discretizer {
  int bins = 4;
  BinStrategy strategy = BinStrategy::quantile;
  std::vector<std::vector<double>> edges;  // per dim, bins-1 ascending cuts

  bool calibrated() const { return !edges.empty(); }
  int dims() const { return int(edges.size()); }

  // samples: flat row-major (count x dims)
  void calibrate(std::span<const double> samples, int count, int dims) {
    if (bins < 2) throw contract_violation("discretizer needs >= 2 bins");
    if (count <= 0 || dims <= 0)
      throw contract_violation("discretizer: empty calibration window");
    edges.assign(size_t(dims), {});
    std::vector<double> col(static_cast<size_t>(count));
    for (int d = 0; d < dims; ++d) {
      for (int i = 0; i < count; ++i) col[size_t(i)] = samples[size_t(i) * dims + d];
      auto& e = edges[size_t(d)];
      e.resize(size_t(bins - 1));
      if (strategy == BinStrategy::uniform) {
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        const double width = (*hi - *lo) / bins;
        for (int k = 1; k < bins; ++k) e[size_t(k - 1)] = *lo + width * k;
      } else {
        std::sort(col.begin(), col.end());
        for (int k = 1; k < bins; ++k)
          e[size_t(k - 1)] = col[size_t(int64_t(k) * count / bins)];
      }
    }
  }

  int bin_of(int dim, double x) const {
    const auto& e = edges[size_t(dim)];
    return int(std::upper_bound(e.begin(), e.end(), x) - e.begin());
  }

  std::vector<int> discretize(std::span<const double> x) const {
    if (int(x.size()) != dims())
      throw contract_violation("discretize: dimension mismatch");
    std::vector<int> out(x.size());
    for (size_t d = 0; d < x.size(); ++d) out[d] = bin_of(int(d), x[d]);
    return out;
  }

  bool operator==(const Discretizer&) const = default;
};

// Maps arbitrary integer tuples onto dense ids in first-seen order.
class SymbolTable {
 public:
  int64_t id_of(const std::vector<int>& key) {
    auto [it, inserted] = map_.try_emplace(key, int64_t(map_.size()));
    return it->second;
  }
  size_t size() const { return map_.size(); }

 private:
  std::map<std::vector<int>, int64_t> map_;
};

// ---- plug-in estimators on samples (base 2) ----

inline double entropy_bits(std::span<const int64_t> samples) {
  if (samples.empty()) return 0.0;
  std::map<int64_t, int64_t> counts;
  for (int64_t s : samples) ++counts[s];
  const double n = double(samples.size());
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = double(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

inline double joint_entropy_bits(std::span<const int64_t> xs,
                                 std::span<const int64_t> ys) {
  if (xs.size() != ys.size())
    throw contract_violation("joint_entropy_bits: length mismatch");
  std::map<std::pair<int64_t, int64_t>, int64_t> counts;
  for (size_t i = 0; i < xs.size(); ++i) ++counts[{xs[i], ys[i]}];
  const double n = double(xs.size());
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = double(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

inline double mi_bits(std::span<const int64_t> xs, std::span<const int64_t> ys) {
  return entropy_bits(xs) + entropy_bits(ys) - joint_entropy_bits(xs, ys);
}

// ---- exact distributions ----

inline double entropy_bits_exact(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw contract_violation("negative probability");
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

// joint[x][y] = p(x, y); rows and columns need not be normalized per-axis
inline double mi_bits_exact(const std::vector<std::vector<double>>& joint) {
  if (joint.empty()) return 0.0;
  const size_t nx = joint.size(), ny = joint[0].size();
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  double total = 0.0;
  for (size_t x = 0; x < nx; ++x)
    for (size_t y = 0; y < ny; ++y) {
      px[x] += joint[x][y];
      py[y] += joint[x][y];
      total += joint[x][y];
    }
  if (std::abs(total - 1.0) > 1e-9)
    throw contract_violation("mi_bits_exact: table does not sum to 1");
  double mi = 0.0;
  for (size_t x = 0; x < nx; ++x)
    for (size_t y = 0; y < ny; ++y) {
      const double p = joint[x][y];
      if (p > 0.0) mi += p * std::log2(p / (px[x] * py[y]));
    }
  return mi;
}

}  // namespace chorus
