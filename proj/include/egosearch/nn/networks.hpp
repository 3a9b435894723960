#pragma once

#include <cmath>
#include <numbers>

#include "egosearch/nn/layers.hpp"

namespace egosearch::nn {

struct EncoderConfig {
  ConvShape input{5, 84, 84};
  int layers = 4;
  int filters = 32;
  int latent = 128;
};

// Pixel encoder: conv(stride 2) then stride-1 convs, ReLU after each,
// flatten, linear to the latent size, layer norm, tanh.
template <typename T>
struct Encoder {
  EncoderConfig cfg;
  std::vector<Conv2d<T>> convs;
  Linear<T> fc;
  LayerNorm<T> ln;

  struct Trace {
    std::vector<typename Conv2d<T>::Cache> conv;
    std::vector<Mat<T>> act;
    typename LayerNorm<T>::Cache norm;
    Mat<T> out;
  };

  Encoder() = default;
  Encoder(const std::string& name, const EncoderConfig& c, Rng& rng) : cfg(c) {
    if (c.layers < 1) throw std::invalid_argument("encoder needs at least one conv layer");
    ConvShape shape = c.input;
    for (int i = 0; i < c.layers; ++i) {
      convs.emplace_back(name + ".conv" + std::to_string(i), shape, c.filters, 3, i == 0 ? 2 : 1, rng);
      shape = convs.back().out_shape();
    }
    fc = Linear<T>(name + ".fc", shape.size(), c.latent, rng);
    ln = LayerNorm<T>(name + ".ln", c.latent);
  }

  Mat<T> forward(const Mat<T>& x, Trace* tr = nullptr) const {
    if (tr) {
      tr->conv.assign(convs.size(), {});
      tr->act.clear();
    }
    Mat<T> h = x;
    for (std::size_t i = 0; i < convs.size(); ++i) {
      h = relu(convs[i].forward(h, tr ? &tr->conv[i] : nullptr));
      if (tr) tr->act.push_back(h);
    }
    Mat<T> y = tanh_forward(ln.forward(fc.forward(h), tr ? &tr->norm : nullptr));
    if (tr) tr->out = y;
    return y;
  }

  // Accumulates parameter gradients for dL/dz. Input gradient is not needed.
  void backward(const Trace& tr, const Mat<T>& dz) {
    Mat<T> g = ln.backward(tr.norm, tanh_backward(tr.out, dz));
    g = fc.backward(tr.act.back(), g);
    for (std::size_t i = convs.size(); i-- > 0;) {
      g = relu_backward(tr.act[i], g);
      g = convs[i].backward(tr.conv[i], g, true, i > 0);
    }
  }

  ParamList<T> params() {
    ParamList<T> out;
    for (auto& c : convs) {
      for (auto* p : c.params()) out.push_back(p);
    }
    for (auto* p : fc.params()) out.push_back(p);
    for (auto* p : ln.params()) out.push_back(p);
    return out;
  }
};

// Fully connected trunk: ReLU between layers, linear output.
template <typename T>
struct Mlp {
  std::vector<Linear<T>> layers;

  struct Trace {
    std::vector<Mat<T>> inputs;  // input to each layer (post-activation)
  };

  Mlp() = default;
  Mlp(const std::string& name, int in, int hidden, int hidden_layers, int out, Rng& rng) {
    int width = in;
    for (int i = 0; i < hidden_layers; ++i) {
      layers.emplace_back(name + ".l" + std::to_string(i), width, hidden, rng);
      width = hidden;
    }
    layers.emplace_back(name + ".out", width, out, rng);
  }

  Mat<T> forward(const Mat<T>& x, Trace* tr = nullptr) const {
    if (tr) tr->inputs.clear();
    Mat<T> h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (tr) tr->inputs.push_back(h);
      h = layers[i].forward(h);
      if (i + 1 < layers.size()) h = relu(h);
    }
    return h;
  }

  Mat<T> backward(const Trace& tr, const Mat<T>& dy, bool param_grad = true) {
    Mat<T> g = dy;
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (i + 1 < layers.size()) g = relu_backward(tr.inputs[i + 1], g);
      g = layers[i].backward(tr.inputs[i], g, param_grad);
    }
    return g;
  }

  ParamList<T> params() {
    ParamList<T> out;
    for (auto& l : layers) {
      for (auto* p : l.params()) out.push_back(p);
    }
    return out;
  }
};

inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 2.0;

// tanh-squashed diagonal Gaussian with reparameterised noise `eps`.
template <typename T>
struct SquashedGaussian {
  Mat<T> mu, raw_log_std, eps;
  Mat<T> tanh_raw, log_std, std, action;
  Vec<T> log_prob;

  static SquashedGaussian forward(const Mat<T>& mu, const Mat<T>& raw, const Mat<T>& eps) {
    SquashedGaussian g;
    g.mu = mu;
    g.raw_log_std = raw;
    g.eps = eps;
    g.tanh_raw = raw.array().tanh().matrix();
    const T lo = static_cast<T>(kLogStdMin), hi = static_cast<T>(kLogStdMax);
    g.log_std = (lo + T(0.5) * (hi - lo) * (g.tanh_raw.array() + T(1))).matrix();
    g.std = g.log_std.array().exp().matrix();
    const Mat<T> u = mu + g.std.cwiseProduct(eps);
    g.action = u.array().tanh().matrix();
    const T half_log_2pi = static_cast<T>(0.5 * std::log(2.0 * std::numbers::pi));
    const Eigen::Index dim = mu.cols();
    g.log_prob = (T(-0.5) * eps.array().square() - g.log_std.array()).matrix().rowwise().sum();
    g.log_prob.array() -= half_log_2pi * static_cast<T>(dim);
    g.log_prob -= (T(1) - g.action.array().square() + T(1e-6)).log().matrix().rowwise().sum();
    return g;
  }

  // Given dL/da and dL/dlogp (per row), returns {dL/dmu, dL/draw_log_std}.
  std::pair<Mat<T>, Mat<T>> backward(const Mat<T>& d_action, const Vec<T>& d_logp) const {
    const auto one_minus_a2 = (T(1) - action.array().square()).eval();
    const auto dlogp_du = (T(2) * action.array() * one_minus_a2 / (one_minus_a2 + T(1e-6))).eval();
    Mat<T> du = (d_action.array() * one_minus_a2).matrix();
    du += (dlogp_du.colwise() * d_logp.array()).matrix();
    Mat<T> dls = du.cwiseProduct(std.cwiseProduct(eps));
    dls.array().colwise() -= d_logp.array();
    const T scale = static_cast<T>(0.5 * (kLogStdMax - kLogStdMin));
    Mat<T> draw = (dls.array() * scale * (T(1) - tanh_raw.array().square())).matrix();
    return {du, draw};
  }
};

// Contrastive cross-entropy with bilinear logits z_a W z_p^T, positives on the
// diagonal. Rows are shifted by their max before the softmax.
template <typename T>
struct CurlResult {
  T loss = T(0);
  Mat<T> d_anchor;  // dL/dz_a
  Mat<T> d_w;       // dL/dW
};

template <typename T>
CurlResult<T> curl_loss(const Mat<T>& z_a, const Mat<T>& z_p, const Mat<T>& w) {
  const Eigen::Index n = z_a.rows();
  if (n < 2) throw std::invalid_argument("contrastive loss needs a batch of at least 2");
  const Mat<T> wz = z_p * w.transpose();  // row j: (W z_p_j)^T
  Mat<T> logits = z_a * wz.transpose();
  CurlResult<T> r;
  Mat<T> probs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mx = logits.row(i).maxCoeff();
    const auto e = (logits.row(i).array() - mx).exp().eval();
    const T sum = e.sum();
    probs.row(i) = e / sum;
    r.loss += -(logits(i, i) - mx - std::log(sum));
  }
  r.loss /= static_cast<T>(n);
  Mat<T> dlogits = probs;
  dlogits.diagonal().array() -= T(1);
  dlogits /= static_cast<T>(n);
  r.d_anchor = dlogits * wz;
  r.d_w = z_a.transpose() * dlogits * z_p;
  return r;
}

}  // namespace egosearch::nn
