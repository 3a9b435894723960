#pragma once

// Soft actor-critic with a contrastive (CURL) auxiliary loss, written against
// the minimal kernel in nn/. Templated on the scalar so the same loss code
// trains in float and is finite-difference checked in double.

#include <algorithm>

#include "egosearch/nn/networks.hpp"
#include "egosearch/nn/optim.hpp"
#include "egosearch/sensor.hpp"

namespace egosearch {

// Mask feature vector plus the two camera joint angles.
inline constexpr int kAuxDim = kMaskFeatureDim + 2;

struct NetworkConfig {
  nn::EncoderConfig encoder;
  int action_dim = 5;
  int hidden = 1024;
  int hidden_layers = 3;
};

template <typename T>
struct Batch {
  nn::Mat<T> obs;       // N x (K*H*W), anchor crops
  nn::Mat<T> positive;  // N x (K*H*W), second crop of the same frames
  nn::Mat<T> aux;       // N x kAuxDim
  nn::Mat<T> action;    // N x A, normalised to [-1, 1]
  nn::Vec<T> reward;
  nn::Vec<T> not_done;
  nn::Mat<T> next_obs;
  nn::Mat<T> next_aux;

  Eigen::Index size() const { return obs.rows(); }
};

template <typename T>
nn::Mat<T> hcat(const nn::Mat<T>& a, const nn::Mat<T>& b) {
  nn::Mat<T> out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

template <typename T>
struct CriticCurlLosses {
  T critic = T(0);
  T curl = T(0);
  nn::Mat<T> latent;  // query-encoder output, detached for the actor
};

template <typename T>
struct ActorAlphaLosses {
  T actor = T(0);
  T alpha = T(0);
  T entropy = T(0);
};

template <typename T>
struct SacCurlModel {
  NetworkConfig cfg;
  nn::Encoder<T> encoder;      // query encoder, shared by actor and critics
  nn::Encoder<T> key_encoder;  // polyak copy; keys and target critic features
  nn::Mlp<T> actor;
  nn::Mlp<T> q1, q2;
  nn::Mlp<T> q1_target, q2_target;
  nn::Param<T> curl_w;
  nn::Param<T> log_alpha;

  SacCurlModel() = default;
  SacCurlModel(const NetworkConfig& c, double init_temperature, Rng& rng) : cfg(c) {
    encoder = nn::Encoder<T>("encoder", c.encoder, rng);
    key_encoder = encoder;
    const int feat = c.encoder.latent + kAuxDim;
    actor = nn::Mlp<T>("actor", feat, c.hidden, c.hidden_layers, 2 * c.action_dim, rng);
    q1 = nn::Mlp<T>("q1", feat + c.action_dim, c.hidden, c.hidden_layers, 1, rng);
    q2 = nn::Mlp<T>("q2", feat + c.action_dim, c.hidden, c.hidden_layers, 1, rng);
    q1_target = q1;
    q2_target = q2;
    curl_w = nn::Param<T>("curl.w", c.encoder.latent, c.encoder.latent);
    nn::fill_uniform(curl_w.value, T(1) / std::sqrt(static_cast<T>(c.encoder.latent)), rng);
    log_alpha = nn::Param<T>("log_alpha", 1, 1);
    log_alpha.value(0, 0) = static_cast<T>(std::log(init_temperature));
  }

  int action_dim() const { return cfg.action_dim; }
  T alpha() const { return std::exp(log_alpha.value(0, 0)); }

  nn::SquashedGaussian<T> policy(const nn::Mat<T>& feat, const nn::Mat<T>& eps,
                                 typename nn::Mlp<T>::Trace* tr = nullptr) const {
    const nn::Mat<T> out = actor.forward(feat, tr);
    const int a = cfg.action_dim;
    return nn::SquashedGaussian<T>::forward(out.leftCols(a), out.rightCols(a), eps);
  }

  // Deterministic action tanh(mean) for a batch of observations.
  nn::Mat<T> mean_action(const nn::Mat<T>& obs, const nn::Mat<T>& aux) const {
    const nn::Mat<T> out = actor.forward(hcat(encoder.forward(obs), aux));
    return out.leftCols(cfg.action_dim).array().tanh().matrix();
  }

  // Bellman target r + gamma * (1 - done) * (min target Q - alpha * log pi).
  nn::Vec<T> critic_target(const Batch<T>& b, const nn::Mat<T>& eps, double gamma) const {
    const auto next = policy(hcat(encoder.forward(b.next_obs), b.next_aux), eps);
    const nn::Mat<T> x = hcat(hcat(key_encoder.forward(b.next_obs), b.next_aux), next.action);
    const nn::Mat<T> t1 = q1_target.forward(x), t2 = q2_target.forward(x);
    nn::Vec<T> v = t1.col(0).cwiseMin(t2.col(0)) - alpha() * next.log_prob;
    return b.reward + static_cast<T>(gamma) * b.not_done.cwiseProduct(v);
  }

  // Joint critic + contrastive loss. Accumulates gradients into the critics,
  // the query encoder, and the bilinear matrix.
  CriticCurlLosses<T> critic_and_curl(const Batch<T>& b, const nn::Vec<T>& target,
                                      double curl_weight = 1.0) {
    const Eigen::Index n = b.size();
    const T inv_n = T(1) / static_cast<T>(n);
    typename nn::Encoder<T>::Trace etr;
    CriticCurlLosses<T> out;
    out.latent = encoder.forward(b.obs, &etr);
    const nn::Mat<T> x = hcat(hcat(out.latent, b.aux), b.action);
    typename nn::Mlp<T>::Trace t1, t2;
    const nn::Mat<T> v1 = q1.forward(x, &t1), v2 = q2.forward(x, &t2);
    const nn::Mat<T> e1 = v1.col(0) - target, e2 = v2.col(0) - target;
    out.critic = (e1.squaredNorm() + e2.squaredNorm()) * inv_n;
    const nn::Mat<T> g1 = q1.backward(t1, T(2) * inv_n * e1);
    const nn::Mat<T> g2 = q2.backward(t2, T(2) * inv_n * e2);
    nn::Mat<T> dz = (g1 + g2).leftCols(cfg.encoder.latent);

    if (curl_weight > 0.0) {
      const nn::Mat<T> keys = key_encoder.forward(b.positive);
      const auto c = nn::curl_loss(out.latent, keys, curl_w.value);
      const T w = static_cast<T>(curl_weight);
      out.curl = c.loss;
      curl_w.grad += w * c.d_w;
      dz += w * c.d_anchor;
    }
    encoder.backward(etr, dz);
    return out;
  }

  // Actor loss on detached features and the temperature loss.
  ActorAlphaLosses<T> actor_and_alpha(const nn::Mat<T>& latent, const nn::Mat<T>& aux,
                                      const nn::Mat<T>& eps, double target_entropy) {
    const Eigen::Index n = latent.rows();
    const T inv_n = T(1) / static_cast<T>(n);
    const nn::Mat<T> feat = hcat(latent, aux);
    typename nn::Mlp<T>::Trace atr, t1, t2;
    const auto g = policy(feat, eps, &atr);
    const nn::Mat<T> x = hcat(feat, g.action);
    const nn::Mat<T> v1 = q1.forward(x, &t1), v2 = q2.forward(x, &t2);
    const T a = alpha();
    ActorAlphaLosses<T> out;
    nn::Mat<T> d1 = nn::Mat<T>::Zero(n, 1), d2 = nn::Mat<T>::Zero(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool first = v1(i, 0) <= v2(i, 0);
      const T minq = first ? v1(i, 0) : v2(i, 0);
      out.actor += (a * g.log_prob(i) - minq) * inv_n;
      (first ? d1 : d2)(i, 0) = -inv_n;
    }
    const nn::Mat<T> dx = q1.backward(t1, d1, false) + q2.backward(t2, d2, false);
    const nn::Vec<T> dlogp = nn::Vec<T>::Constant(n, a * inv_n);
    const auto [dmu, draw] = g.backward(dx.rightCols(cfg.action_dim), dlogp);
    actor.backward(atr, hcat(dmu, draw));

    const T h = static_cast<T>(target_entropy);
    const T gap = (-g.log_prob.array() - h).mean();
    out.alpha = a * gap;
    log_alpha.grad(0, 0) += a * gap;
    out.entropy = -g.log_prob.mean();
    return out;
  }

  nn::ParamList<T> critic_params() {
    auto p = q1.params();
    for (auto* x : q2.params()) p.push_back(x);
    return p;
  }
  nn::ParamList<T> critic_target_params() {
    auto p = q1_target.params();
    for (auto* x : q2_target.params()) p.push_back(x);
    return p;
  }
  nn::ParamList<T> encoder_params() {
    auto p = encoder.params();
    p.push_back(&curl_w);
    return p;
  }

  // Every tensor, in a fixed order (checkpoint layout).
  nn::ParamList<T> all_params() {
    nn::ParamList<T> p;
    for (auto* x : encoder.params()) p.push_back(x);
    for (auto* x : key_encoder.params()) p.push_back(x);
    for (auto* x : actor.params()) p.push_back(x);
    for (auto* x : critic_params()) p.push_back(x);
    for (auto* x : critic_target_params()) p.push_back(x);
    p.push_back(&curl_w);
    p.push_back(&log_alpha);
    return p;
  }

  void soft_update(double critic_tau, double encoder_tau) {
    nn::polyak_update(critic_params(), critic_target_params(), critic_tau);
    nn::polyak_update(encoder.params(), key_encoder.params(), encoder_tau);
  }
};

}  // namespace egosearch
