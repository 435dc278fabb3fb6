#pragma once

// Small neural-network core used by the instability classifier and the
// frequency-deviation regressor. Parameters live in one flat vector so
// gradient checks and SGD stay trivial; everything is deterministic for a
// fixed seed. Scalar is templated: float for training speed, double for
// finite-difference gradient verification.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "visgrid/network.hpp"

namespace visgrid {

namespace detail {

inline double rng_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <typename Scalar>
void glorot_fill(Eigen::Ref<VecX<Scalar>> block, int fan_in, int fan_out,
                 std::mt19937_64& gen) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < block.size(); ++i)
    block(i) = static_cast<Scalar>((2.0 * rng_unit(gen) - 1.0) * r);
}

// Bit-exact scalar round-trips via C99 hexfloats.
inline std::string to_hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double from_hexfloat(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw Error("model file: bad numeric token '" + s + "'");
  return v;
}

}  // namespace detail

// Shared convolutional-attention trunk: five feature-axis convolution filters
// (kernel 7, zero padded) concatenated with the input as a sixth channel, a
// per-time dense embedding with ReLU, and scaled dot-product attention pooling
// across the time positions. Both networks put their heads on the pooled
// embedding. Trunk parameters occupy the front of the owner's flat vector.
template <typename Scalar>
struct CnnAttTrunk {
  int f_rows = 0, t_cols = 0;
  int n_filters = 5, kernel = 7, d_embed = 32;
  int off_conv_w = 0, off_conv_b = 0, off_emb_w = 0, off_emb_b = 0;
  int off_att_q = 0, total = 0;

  int z_rows() const { return f_rows * (1 + n_filters); }

  void configure(int rows, int cols) {
    f_rows = rows;
    t_cols = cols;
    off_conv_w = 0;
    off_conv_b = off_conv_w + n_filters * kernel;
    off_emb_w = off_conv_b + n_filters;
    off_emb_b = off_emb_w + d_embed * z_rows();
    off_att_q = off_emb_b + d_embed;
    total = off_att_q + d_embed;
  }

  void init_params(VecX<Scalar>& params, std::mt19937_64& gen) const {
    detail::glorot_fill<Scalar>(params.segment(off_conv_w, n_filters * kernel),
                                kernel, 1, gen);
    detail::glorot_fill<Scalar>(params.segment(off_emb_w, d_embed * z_rows()),
                                z_rows(), d_embed, gen);
    detail::glorot_fill<Scalar>(params.segment(off_att_q, d_embed), d_embed, 1,
                                gen);
  }

  struct Workspace {
    MatX<Scalar> x, z, a, h, dz, da;
    VecX<Scalar> scores, alpha, pooled;
  };

  using CMap = Eigen::Map<const MatX<Scalar>>;
  using MMap = Eigen::Map<MatX<Scalar>>;

  // Fills the workspace; ws.pooled holds the attention-pooled embedding.
  void forward(const VecX<Scalar>& params, const MatX<Scalar>& window,
               Workspace& ws) const {
    if (window.rows() != f_rows || window.cols() != t_cols)
      throw Error("network: window is " + std::to_string(window.rows()) + "x" +
                  std::to_string(window.cols()) + ", expected " +
                  std::to_string(f_rows) + "x" + std::to_string(t_cols));
    const int half = kernel / 2;
    ws.x = window;
    ws.z.setZero(z_rows(), t_cols);
    ws.z.topRows(f_rows) = window;
    CMap conv_w(params.data() + off_conv_w, kernel, n_filters);
    for (int f = 0; f < n_filters; ++f) {
      auto block = ws.z.middleRows(f_rows * (1 + f), f_rows);
      for (int u = 0; u < kernel; ++u) {
        const int off = u - half;
        const int lo = std::max(0, -off);
        const int hi = std::min(f_rows, f_rows - off);
        if (hi <= lo) continue;
        block.middleRows(lo, hi - lo).noalias() +=
            conv_w(u, f) * window.middleRows(lo + off, hi - lo);
      }
      block.array() += params(off_conv_b + f);
    }
    CMap emb_w(params.data() + off_emb_w, d_embed, z_rows());
    ws.a.noalias() = emb_w * ws.z;
    ws.a.colwise() += VecX<Scalar>(params.segment(off_emb_b, d_embed));
    ws.h = ws.a.cwiseMax(Scalar(0));
    const Scalar inv_sqrt_d = Scalar(1) / std::sqrt(Scalar(d_embed));
    ws.scores.noalias() =
        ws.h.transpose() * params.segment(off_att_q, d_embed) * inv_sqrt_d;
    const Scalar smax = ws.scores.maxCoeff();
    ws.alpha = (ws.scores.array() - smax).exp();
    ws.alpha /= ws.alpha.sum();
    ws.pooled.noalias() = ws.h * ws.alpha;
  }

  // Propagates d(loss)/d(pooled) back through attention, embedding, and
  // convolution, accumulating parameter gradients into grad.
  void backward(const VecX<Scalar>& params, const VecX<Scalar>& dpooled,
                Workspace& ws, VecX<Scalar>& grad) const {
    const Scalar inv_sqrt_d = Scalar(1) / std::sqrt(Scalar(d_embed));
    VecX<Scalar> dalpha = ws.h.transpose() * dpooled;
    const Scalar mix = ws.alpha.dot(dalpha);
    VecX<Scalar> dscores = (ws.alpha.array() * (dalpha.array() - mix)).matrix();
    grad.segment(off_att_q, d_embed).noalias() += ws.h * dscores * inv_sqrt_d;
    MatX<Scalar> dh = dpooled * ws.alpha.transpose();
    dh.noalias() += params.segment(off_att_q, d_embed) *
                    (dscores.transpose() * inv_sqrt_d);

    ws.da = dh.cwiseProduct(
        (ws.a.array() > Scalar(0)).template cast<Scalar>().matrix());
    MMap g_emb_w(grad.data() + off_emb_w, d_embed, z_rows());
    g_emb_w.noalias() += ws.da * ws.z.transpose();
    grad.segment(off_emb_b, d_embed) += ws.da.rowwise().sum();
    CMap emb_w(params.data() + off_emb_w, d_embed, z_rows());
    ws.dz.noalias() = emb_w.transpose() * ws.da;

    const int half = kernel / 2;
    MMap g_conv_w(grad.data() + off_conv_w, kernel, n_filters);
    for (int f = 0; f < n_filters; ++f) {
      auto dblock = ws.dz.middleRows(f_rows * (1 + f), f_rows);
      grad(off_conv_b + f) += dblock.sum();
      for (int u = 0; u < kernel; ++u) {
        const int off = u - half;
        const int lo = std::max(0, -off);
        const int hi = std::min(f_rows, f_rows - off);
        if (hi <= lo) continue;
        g_conv_w(u, f) += dblock.middleRows(lo, hi - lo)
                              .cwiseProduct(ws.x.middleRows(lo + off, hi - lo))
                              .sum();
      }
    }
  }
};

// Classifier: the shared trunk with a two-class softmax head.
template <typename Scalar>
struct CnnAttNet {
  CnnAttTrunk<Scalar> trunk;
  int n_classes = 2;
  VecX<Scalar> params;
  int off_out_w = 0, off_out_b = 0, total = 0;

  void configure(int rows, int cols) {
    trunk.configure(rows, cols);
    off_out_w = trunk.total;
    off_out_b = off_out_w + n_classes * trunk.d_embed;
    total = off_out_b + n_classes;
    params = VecX<Scalar>::Zero(total);
  }

  void init_params(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    trunk.init_params(params, gen);
    detail::glorot_fill<Scalar>(
        params.segment(off_out_w, n_classes * trunk.d_embed), trunk.d_embed,
        n_classes, gen);
  }

  struct Workspace {
    typename CnnAttTrunk<Scalar>::Workspace tw;
    VecX<Scalar> logits, probs;
  };

  using CMap = Eigen::Map<const MatX<Scalar>>;
  using MMap = Eigen::Map<MatX<Scalar>>;

  // Returns class probabilities; fills the workspace for backward().
  VecX<Scalar> forward(const MatX<Scalar>& window, Workspace& ws) const {
    trunk.forward(params, window, ws.tw);
    CMap out_w(params.data() + off_out_w, n_classes, trunk.d_embed);
    ws.logits.noalias() = out_w * ws.tw.pooled;
    ws.logits += params.segment(off_out_b, n_classes);
    const Scalar lmax = ws.logits.maxCoeff();
    ws.probs = (ws.logits.array() - lmax).exp();
    ws.probs /= ws.probs.sum();
    return ws.probs;
  }

  // Accumulates d(cross-entropy)/d(params) into grad; returns the sample loss.
  Scalar backward(int label, Workspace& ws, VecX<Scalar>& grad) const {
    if (label < 0 || label >= n_classes)
      throw Error("classifier: label out of range");
    const Scalar loss = -std::log(std::max(ws.probs(label), Scalar(1e-12)));
    VecX<Scalar> dlogits = ws.probs;
    dlogits(label) -= Scalar(1);

    CMap out_w(params.data() + off_out_w, n_classes, trunk.d_embed);
    MMap g_out_w(grad.data() + off_out_w, n_classes, trunk.d_embed);
    g_out_w.noalias() += dlogits * ws.tw.pooled.transpose();
    grad.segment(off_out_b, n_classes) += dlogits;
    VecX<Scalar> dpooled = out_w.transpose() * dlogits;
    trunk.backward(params, dpooled, ws.tw, grad);
    return loss;
  }
};

// Regressor: the shared trunk with a dense ReLU stack on the pooled embedding
// and a linear scalar output, trained with per-record squared error.
template <typename Scalar>
struct CnnAttRegNet {
  CnnAttTrunk<Scalar> trunk;
  std::vector<int> dims;  // {d_embed, hidden..., 1}
  VecX<Scalar> params;
  std::vector<int> off_w, off_b;
  int total = 0;

  void configure(int rows, int cols, std::vector<int> hidden) {
    trunk.configure(rows, cols);
    dims.assign(1, trunk.d_embed);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    off_w.clear();
    off_b.clear();
    int at = trunk.total;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      off_w.push_back(at);
      at += dims[l + 1] * dims[l];
      off_b.push_back(at);
      at += dims[l + 1];
    }
    total = at;
    params = VecX<Scalar>::Zero(total);
  }

  void init_params(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    trunk.init_params(params, gen);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      detail::glorot_fill<Scalar>(
          params.segment(off_w[l], dims[l + 1] * dims[l]), dims[l], dims[l + 1],
          gen);
  }

  int n_layers() const { return static_cast<int>(dims.size()) - 1; }

  struct Workspace {
    typename CnnAttTrunk<Scalar>::Workspace tw;
    std::vector<VecX<Scalar>> act;  // act[0] = pooled, act[l+1] post layer l
  };

  using CMap = Eigen::Map<const MatX<Scalar>>;
  using MMap = Eigen::Map<MatX<Scalar>>;

  // Returns the scalar prediction; fills the workspace for backward().
  Scalar forward(const MatX<Scalar>& window, Workspace& ws) const {
    trunk.forward(params, window, ws.tw);
    ws.act.assign(static_cast<std::size_t>(n_layers() + 1), VecX<Scalar>());
    ws.act[0] = ws.tw.pooled;
    for (int l = 0; l < n_layers(); ++l) {
      CMap w(params.data() + off_w[static_cast<std::size_t>(l)], dims[l + 1],
             dims[l]);
      VecX<Scalar> pre = w * ws.act[static_cast<std::size_t>(l)];
      pre += params.segment(off_b[static_cast<std::size_t>(l)], dims[l + 1]);
      ws.act[static_cast<std::size_t>(l + 1)] =
          (l + 1 == n_layers()) ? pre : pre.cwiseMax(Scalar(0)).eval();
    }
    return ws.act.back()(0);
  }

  // Squared error against the target; accumulates gradients into grad.
  Scalar loss_and_grad(const MatX<Scalar>& window, Scalar y, Workspace& ws,
                       VecX<Scalar>& grad) const {
    const Scalar pred = forward(window, ws);
    const Scalar err = pred - y;
    VecX<Scalar> delta = VecX<Scalar>::Constant(1, Scalar(2) * err);
    for (int l = n_layers() - 1; l >= 0; --l) {
      MMap gw(grad.data() + off_w[static_cast<std::size_t>(l)], dims[l + 1],
              dims[l]);
      gw.noalias() += delta * ws.act[static_cast<std::size_t>(l)].transpose();
      grad.segment(off_b[static_cast<std::size_t>(l)], dims[l + 1]) += delta;
      CMap w(params.data() + off_w[static_cast<std::size_t>(l)], dims[l + 1],
             dims[l]);
      VecX<Scalar> next = w.transpose() * delta;
      if (l == 0) {
        trunk.backward(params, next, ws.tw, grad);
        break;
      }
      const auto& act = ws.act[static_cast<std::size_t>(l)];
      delta = next.cwiseProduct(
          (act.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    return err * err;
  }
};

// Plain SGD with momentum; state persists across batches.
template <typename Scalar>
struct SgdState {
  VecX<Scalar> velocity;
  double learning_rate = 1e-2;
  double momentum = 0.9;

  void step(VecX<Scalar>& params, const VecX<Scalar>& grad) {
    if (velocity.size() != params.size())
      velocity = VecX<Scalar>::Zero(params.size());
    velocity = Scalar(momentum) * velocity + grad;
    params -= Scalar(learning_rate) * velocity;
  }
};

// Adam optimizer with decoupled weight decay; state persists across batches.
template <typename Scalar>
struct AdamState {
  VecX<Scalar> m, v;
  double learning_rate = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weight_decay = 0.0;
  long step_count = 0;

  void step(VecX<Scalar>& params, const VecX<Scalar>& grad) {
    if (m.size() != params.size()) {
      m = VecX<Scalar>::Zero(params.size());
      v = VecX<Scalar>::Zero(params.size());
    }
    ++step_count;
    m = Scalar(beta1) * m + Scalar(1 - beta1) * grad;
    v = Scalar(beta2) * v + Scalar(1 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    const Scalar rate = Scalar(learning_rate / bc1);
    const Scalar scale = Scalar(1.0 / std::sqrt(bc2));
    if (weight_decay > 0.0)
      params *= Scalar(1.0 - learning_rate * weight_decay);
    params.array() -=
        rate * m.array() / ((v.array().max(Scalar(0)) * scale * scale).sqrt() + Scalar(eps));
  }
};

namespace detail {

template <typename Scalar>
void write_param_block(std::ostream& os, const char* name,
                       const VecX<Scalar>& v) {
  os << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << to_hexfloat(static_cast<double>(v(i)));
    os << ((i + 1) % 8 == 0 || i + 1 == v.size() ? '\n' : ' ');
  }
}

template <typename Scalar>
VecX<Scalar> read_param_block(std::istream& is, const std::string& expect) {
  std::string name;
  long long count = 0;
  if (!(is >> name >> count) || name != expect)
    throw Error("model file: expected block '" + expect + "', got '" + name +
                "'");
  VecX<Scalar> v(count);
  std::string tok;
  for (long long i = 0; i < count; ++i) {
    if (!(is >> tok)) throw Error("model file: truncated block '" + expect + "'");
    v(i) = static_cast<Scalar>(from_hexfloat(tok));
  }
  return v;
}

}  // namespace detail

}  // namespace visgrid
