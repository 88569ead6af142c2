#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "chorus/common.hpp"
#include "chorus/rng.hpp"

namespace chorus {

inline constexpr double kProbClamp = 1e-6;

// Two tanh hidden layers over [view, messages] with a per-cell sigmoid
// head. With `attention` set, the view is first passed through a
// single-head self-attention block over per-cell embeddings; messages
// always enter the trunk raw. The second hidden activation is the latent
// exposed to the communication layer.
struct NetSpec {
  int view_dim = 0;
  int msg_dim = 0;
  int hidden1 = 32;
  int hidden2 = 32;
  int out_dim = 0;
  bool attention = false;
  int attn_embed = 8;

  int trunk_in() const {
    return (attention ? view_dim * attn_embed : view_dim) + msg_dim;
  }
  int attn_params() const {
    if (!attention) return 0;
    const int m = attn_embed;
    return m + m + view_dim * m + 3 * m * m;  // w_val, b_val, pos, Wq, Wk, Wv
  }
  int param_count() const {
    const int in = trunk_in();
    return attn_params() + hidden1 * in + hidden1 + hidden2 * hidden1 +
           hidden2 + out_dim * hidden2 + out_dim;
  }

  bool operator==(const NetSpec&) const = default;
};

// Activation cache for one forward pass.
struct Forward {
  std::vector<double> view, msgs;
  std::vector<double> embed, q, k, v, attn, ctx;  // attention intermediates
  std::vector<double> x, h1, h2, logits, probs_raw, probs;
};

struct Gradients {
  std::vector<double> params;
  std::vector<double> view;
  std::vector<double> msgs;
};

class Net {
 public:
  Net() = default;

  Net(const NetSpec& spec, uint64_t seed, uint64_t agent_id) : spec_(spec) {
    params_.assign(size_t(spec.param_count()), 0.0);
    layout();
    int ordinal = 0;
    auto fill = [&](size_t off, size_t count, double bound) {
      Rng rng(seed, stream::kInit, agent_id, uint64_t(ordinal++));
      for (size_t i = 0; i < count; ++i)
        params_[off + i] = rng.uniform_in(-bound, bound);
    };
    const int m = spec.attn_embed, vd = spec.view_dim;
    if (spec.attention) {
      const double eb = 1.0 / std::sqrt(double(m));
      fill(size_t(o_wval_), size_t(m), eb);
      fill(size_t(o_bval_), size_t(m), eb);
      fill(size_t(o_pos_), size_t(vd) * m, eb);
      fill(size_t(o_wq_), size_t(m) * m, eb);
      fill(size_t(o_wk_), size_t(m) * m, eb);
      fill(size_t(o_wv_), size_t(m) * m, eb);
    }
    fill(size_t(o_w1_), size_t(spec.hidden1) * spec.trunk_in(),
         1.0 / std::sqrt(double(spec.trunk_in())));
    ordinal++;  // b1 stays zero but keeps its ordinal slot
    fill(size_t(o_w2_), size_t(spec.hidden2) * spec.hidden1,
         1.0 / std::sqrt(double(spec.hidden1)));
    ordinal++;
    fill(size_t(o_w3_), size_t(spec.out_dim) * spec.hidden2,
         1.0 / std::sqrt(double(spec.hidden2)));
  }

  const NetSpec& spec() const { return spec_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  void set_params(std::vector<double> p) {
    if (int(p.size()) != spec_.param_count())
      throw contract_violation("set_params: size mismatch");
    params_ = std::move(p);
    layout();
  }

  Forward forward(std::span<const double> view,
                  std::span<const double> msgs) const {
    if (int(view.size()) != spec_.view_dim || int(msgs.size()) != spec_.msg_dim)
      throw contract_violation("forward: input layout mismatch");
    Forward f;
    f.view.assign(view.begin(), view.end());
    f.msgs.assign(msgs.begin(), msgs.end());

    if (spec_.attention) {
      attention_forward(f);
      f.x = f.ctx;
    } else {
      f.x = f.view;
    }
    f.x.insert(f.x.end(), f.msgs.begin(), f.msgs.end());

    f.h1 = affine(o_w1_, o_b1_, spec_.hidden1, f.x);
    for (double& h : f.h1) h = std::tanh(h);
    f.h2 = affine(o_w2_, o_b2_, spec_.hidden2, f.h1);
    for (double& h : f.h2) h = std::tanh(h);
    f.logits = affine(o_w3_, o_b3_, spec_.out_dim, f.h2);

    f.probs_raw.resize(f.logits.size());
    f.probs.resize(f.logits.size());
    for (size_t i = 0; i < f.logits.size(); ++i) {
      f.probs_raw[i] = 1.0 / (1.0 + std::exp(-f.logits[i]));
      f.probs[i] = std::min(1.0 - kProbClamp, std::max(kProbClamp, f.probs_raw[i]));
    }
    return f;
  }

  // dlogits = dL/d(logits). Gradients for parameters and for both input
  // blocks; the clamp on probs is treated as pass-through.
  Gradients backward(const Forward& f, std::span<const double> dlogits) const {
    Gradients g;
    g.params.assign(params_.size(), 0.0);
    g.msgs.assign(size_t(spec_.msg_dim), 0.0);
    g.view.assign(size_t(spec_.view_dim), 0.0);

    std::vector<double> dh2(size_t(spec_.hidden2), 0.0);
    affine_backward(o_w3_, o_b3_, spec_.out_dim, f.h2, dlogits, g.params, dh2);
    for (int i = 0; i < spec_.hidden2; ++i) dh2[size_t(i)] *= 1.0 - f.h2[size_t(i)] * f.h2[size_t(i)];

    std::vector<double> dh1(size_t(spec_.hidden1), 0.0);
    affine_backward(o_w2_, o_b2_, spec_.hidden2, f.h1, dh2, g.params, dh1);
    for (int i = 0; i < spec_.hidden1; ++i) dh1[size_t(i)] *= 1.0 - f.h1[size_t(i)] * f.h1[size_t(i)];

    std::vector<double> dx(f.x.size(), 0.0);
    affine_backward(o_w1_, o_b1_, spec_.hidden1, f.x, dh1, g.params, dx);

    const int head = int(f.x.size()) - spec_.msg_dim;
    for (int i = 0; i < spec_.msg_dim; ++i) g.msgs[size_t(i)] = dx[size_t(head + i)];
    if (spec_.attention) {
      attention_backward(f, std::span<const double>(dx.data(), size_t(head)), g);
    } else {
      for (int i = 0; i < spec_.view_dim; ++i) g.view[size_t(i)] = dx[size_t(i)];
    }
    return g;
  }

  bool operator==(const Net& o) const {
    return spec_ == o.spec_ && params_ == o.params_;
  }

 private:
  void layout() {
    const int m = spec_.attn_embed, vd = spec_.view_dim;
    int off = 0;
    if (spec_.attention) {
      o_wval_ = off; off += m;
      o_bval_ = off; off += m;
      o_pos_ = off; off += vd * m;
      o_wq_ = off; off += m * m;
      o_wk_ = off; off += m * m;
      o_wv_ = off; off += m * m;
    }
    const int in = spec_.trunk_in();
    o_w1_ = off; off += spec_.hidden1 * in;
    o_b1_ = off; off += spec_.hidden1;
    o_w2_ = off; off += spec_.hidden2 * spec_.hidden1;
    o_b2_ = off; off += spec_.hidden2;
    o_w3_ = off; off += spec_.out_dim * spec_.hidden2;
    o_b3_ = off;
  }

  std::vector<double> affine(int w_off, int b_off, int rows,
                             const std::vector<double>& x) const {
    std::vector<double> y(static_cast<size_t>(rows));
    const int cols = int(x.size());
    for (int r = 0; r < rows; ++r) {
      double acc = params_[size_t(b_off + r)];
      const double* w = params_.data() + w_off + size_t(r) * cols;
      for (int c = 0; c < cols; ++c) acc += w[c] * x[size_t(c)];
      y[size_t(r)] = acc;
    }
    return y;
  }

  void affine_backward(int w_off, int b_off, int rows,
                       const std::vector<double>& x,
                       std::span<const double> dy, std::vector<double>& gparams,
                       std::vector<double>& dx) const {
    const int cols = int(x.size());
    for (int r = 0; r < rows; ++r) {
      const double d = dy[size_t(r)];
      gparams[size_t(b_off + r)] += d;
      const double* w = params_.data() + w_off + size_t(r) * cols;
      double* gw = gparams.data() + w_off + size_t(r) * cols;
      for (int c = 0; c < cols; ++c) {
        gw[c] += d * x[size_t(c)];
        dx[size_t(c)] += d * w[c];
      }
    }
  }

  void attention_forward(Forward& f) const {
    const int v = spec_.view_dim, m = spec_.attn_embed;
    const double inv_sqrt_m = 1.0 / std::sqrt(double(m));
    f.embed.assign(size_t(v) * m, 0.0);
    for (int i = 0; i < v; ++i)
      for (int k = 0; k < m; ++k)
        f.embed[size_t(i) * m + k] = f.view[size_t(i)] * params_[size_t(o_wval_ + k)] +
                                     params_[size_t(o_bval_ + k)] +
                                     params_[size_t(o_pos_) + size_t(i) * m + k];
    auto project = [&](int w_off) {
      std::vector<double> out(size_t(v) * m, 0.0);
      for (int i = 0; i < v; ++i)
        for (int l = 0; l < m; ++l) {
          double acc = 0.0;
          for (int k = 0; k < m; ++k)
            acc += f.embed[size_t(i) * m + k] * params_[size_t(w_off) + size_t(k) * m + l];
          out[size_t(i) * m + l] = acc;
        }
      return out;
    };
    f.q = project(o_wq_);
    f.k = project(o_wk_);
    f.v = project(o_wv_);
    f.attn.assign(size_t(v) * v, 0.0);
    for (int i = 0; i < v; ++i) {
      double mx = -1e300;
      for (int j = 0; j < v; ++j) {
        double s = 0.0;
        for (int l = 0; l < m; ++l)
          s += f.q[size_t(i) * m + l] * f.k[size_t(j) * m + l];
        s *= inv_sqrt_m;
        f.attn[size_t(i) * v + j] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (int j = 0; j < v; ++j) {
        double& a = f.attn[size_t(i) * v + j];
        a = std::exp(a - mx);
        z += a;
      }
      for (int j = 0; j < v; ++j) f.attn[size_t(i) * v + j] /= z;
    }
    f.ctx.assign(size_t(v) * m, 0.0);
    for (int i = 0; i < v; ++i)
      for (int j = 0; j < v; ++j) {
        const double a = f.attn[size_t(i) * v + j];
        for (int l = 0; l < m; ++l)
          f.ctx[size_t(i) * m + l] += a * f.v[size_t(j) * m + l];
      }
  }

  void attention_backward(const Forward& f, std::span<const double> dctx,
                          Gradients& g) const {
    const int v = spec_.view_dim, m = spec_.attn_embed;
    const double inv_sqrt_m = 1.0 / std::sqrt(double(m));
    std::vector<double> dattn(size_t(v) * v, 0.0), dv(size_t(v) * m, 0.0);
    for (int i = 0; i < v; ++i)
      for (int j = 0; j < v; ++j) {
        double acc = 0.0;
        for (int l = 0; l < m; ++l)
          acc += dctx[size_t(i) * m + l] * f.v[size_t(j) * m + l];
        dattn[size_t(i) * v + j] = acc;
        const double a = f.attn[size_t(i) * v + j];
        for (int l = 0; l < m; ++l)
          dv[size_t(j) * m + l] += a * dctx[size_t(i) * m + l];
      }
    // softmax backward per row
    std::vector<double> dscore(size_t(v) * v, 0.0);
    for (int i = 0; i < v; ++i) {
      double dot = 0.0;
      for (int j = 0; j < v; ++j)
        dot += dattn[size_t(i) * v + j] * f.attn[size_t(i) * v + j];
      for (int j = 0; j < v; ++j)
        dscore[size_t(i) * v + j] =
            f.attn[size_t(i) * v + j] * (dattn[size_t(i) * v + j] - dot);
    }
    std::vector<double> dq(size_t(v) * m, 0.0), dk(size_t(v) * m, 0.0);
    for (int i = 0; i < v; ++i)
      for (int j = 0; j < v; ++j) {
        const double ds = dscore[size_t(i) * v + j] * inv_sqrt_m;
        for (int l = 0; l < m; ++l) {
          dq[size_t(i) * m + l] += ds * f.k[size_t(j) * m + l];
          dk[size_t(j) * m + l] += ds * f.q[size_t(i) * m + l];
        }
      }
    std::vector<double> dembed(size_t(v) * m, 0.0);
    auto project_back = [&](int w_off, const std::vector<double>& dout) {
      for (int i = 0; i < v; ++i)
        for (int l = 0; l < m; ++l) {
          const double d = dout[size_t(i) * m + l];
          for (int k = 0; k < m; ++k) {
            g.params[size_t(w_off) + size_t(k) * m + l] +=
                f.embed[size_t(i) * m + k] * d;
            dembed[size_t(i) * m + k] += d * params_[size_t(w_off) + size_t(k) * m + l];
          }
        }
    };
    project_back(o_wq_, dq);
    project_back(o_wk_, dk);
    project_back(o_wv_, dv);
    for (int i = 0; i < v; ++i)
      for (int k = 0; k < m; ++k) {
        const double d = dembed[size_t(i) * m + k];
        g.params[size_t(o_pos_) + size_t(i) * m + k] += d;
        g.params[size_t(o_bval_ + k)] += d;
        g.params[size_t(o_wval_ + k)] += f.view[size_t(i)] * d;
        g.view[size_t(i)] += d * params_[size_t(o_wval_ + k)];
      }
  }

  NetSpec spec_;
  std::vector<double> params_;
  int o_wval_ = 0, o_bval_ = 0, o_pos_ = 0, o_wq_ = 0, o_wk_ = 0, o_wv_ = 0;
  int o_w1_ = 0, o_b1_ = 0, o_w2_ = 0, o_b2_ = 0, o_w3_ = 0, o_b3_ = 0;
};

}  // namespace chorus
