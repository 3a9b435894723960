#include "egosearch/gradcheck.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <limits>

#include "egosearch/sac_curl.hpp"

namespace egosearch {

using nn::Mat;
using nn::Vec;
using M = Mat<double>;
using V = Vec<double>;

namespace {

constexpr double kStep = 1e-5;

M numeric_grad(M& x, const std::function<double()>& loss) {
  M g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + kStep;
    const double up = loss();
    x.data()[i] = saved - kStep;
    const double down = loss();
    x.data()[i] = saved;
    g.data()[i] = (up - down) / (2.0 * kStep);
  }
  return g;
}

M random_mat(Eigen::Index r, Eigen::Index c, double bound, Rng& rng) {
  M m(r, c);
  nn::fill_uniform(m, bound, rng);
  return m;
}

// Pushes preactivations away from the relu kink so that a finite step never
// crosses it.
M away_from_zero(M m, double margin) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double& v = m.data()[i];
    if (std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
  return m;
}

double weighted_sum(const M& y, const M& r) { return (y.array() * r.array()).sum(); }

// Smallest |preactivation| over every relu, so that trials sitting on a kink
// (where central differences are meaningless) can be redrawn.
constexpr double kKinkMargin = 2e-3;

double relu_margin(const nn::Encoder<double>& e, const M& x) {
  double m = std::numeric_limits<double>::infinity();
  M h = x;
  for (const auto& c : e.convs) {
    const M pre = c.forward(h);
    m = std::min(m, pre.cwiseAbs().minCoeff());
    h = nn::relu(pre);
  }
  return m;
}

double relu_margin(const nn::Mlp<double>& mlp, const M& x) {
  double m = std::numeric_limits<double>::infinity();
  M h = x;
  for (std::size_t i = 0; i + 1 < mlp.layers.size(); ++i) {
    const M pre = mlp.layers[i].forward(h);
    m = std::min(m, pre.cwiseAbs().minCoeff());
    h = nn::relu(pre);
  }
  return m;
}

template <typename Draw>
void redraw_until(Draw draw) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    if (draw()) return;
  }
  throw std::runtime_error("gradient check could not draw a trial away from relu kinks");
}

class Checker {
 public:
  explicit Checker(GradCheckReport& r) : report_(r) {}

  void compare(const std::string& check, const std::string& tensor, const M& analytic, M& x,
               const std::function<double()>& loss) {
    const M numeric = numeric_grad(x, loss);
    report_.entries.push_back({check, tensor, relative_error(analytic, numeric)});
  }

  void compare_params(const std::string& check, const nn::ParamList<double>& ps,
                      const std::vector<M>& analytic, const std::function<double()>& loss) {
    for (std::size_t i = 0; i < ps.size(); ++i) compare(check, ps[i]->name, analytic[i], ps[i]->value, loss);
  }

 private:
  GradCheckReport& report_;
};

std::vector<M> grads_of(const nn::ParamList<double>& ps) {
  std::vector<M> g;
  for (const auto* p : ps) g.push_back(p->grad);
  return g;
}

void check_linear(Checker& ck, Rng& rng) {
  const int n = rng.uniform_int(1, 4), in = rng.uniform_int(1, 5), out = rng.uniform_int(1, 4);
  nn::Linear<double> lin("linear", in, out, rng);
  M x = random_mat(n, in, 1.0, rng);
  const M r = random_mat(n, out, 1.0, rng);
  auto loss = [&] { return weighted_sum(lin.forward(x), r); };
  const M dx = lin.backward(x, r);
  ck.compare_params("linear", lin.params(), grads_of(lin.params()), loss);
  ck.compare("linear", "x", dx, x, loss);
}

void check_activations(Checker& ck, Rng& rng) {
  const int n = rng.uniform_int(1, 4), d = rng.uniform_int(1, 6);
  M x = away_from_zero(random_mat(n, d, 2.0, rng), 1e-2);
  const M r = random_mat(n, d, 1.0, rng);
  {
    auto loss = [&] { return weighted_sum(nn::relu(x), r); };
    ck.compare("relu", "x", nn::relu_backward(nn::relu(x), r), x, loss);
  }
  {
    auto loss = [&] { return weighted_sum(nn::tanh_forward(x), r); };
    ck.compare("tanh", "x", nn::tanh_backward(nn::tanh_forward(x), r), x, loss);
  }
}

void check_layernorm(Checker& ck, Rng& rng) {
  const int n = rng.uniform_int(1, 4), d = rng.uniform_int(2, 6);
  nn::LayerNorm<double> ln("ln", d);
  nn::fill_uniform(ln.gamma.value, 0.5, rng);
  ln.gamma.value.array() += 1.0;
  nn::fill_uniform(ln.beta.value, 0.5, rng);
  M x = random_mat(n, d, 1.0, rng);
  const M r = random_mat(n, d, 1.0, rng);
  auto loss = [&] { return weighted_sum(ln.forward(x), r); };
  nn::LayerNorm<double>::Cache c;
  ln.forward(x, &c);
  const M dx = ln.backward(c, r);
  ck.compare_params("layernorm", ln.params(), grads_of(ln.params()), loss);
  ck.compare("layernorm", "x", dx, x, loss);
}

void check_conv(Checker& ck, Rng& rng, int stride) {
  const nn::ConvShape in{rng.uniform_int(1, 3), rng.uniform_int(3, 7), rng.uniform_int(3, 7)};
  const int n = rng.uniform_int(1, 3), out = rng.uniform_int(1, 3);
  nn::Conv2d<double> conv("conv", in, out, 3, stride, rng);
  M x = random_mat(n, in.size(), 1.0, rng);
  const M r = random_mat(n, conv.out_shape().size(), 1.0, rng);
  auto loss = [&] { return weighted_sum(conv.forward(x), r); };
  nn::Conv2d<double>::Cache c;
  conv.forward(x, &c);
  const M dx = conv.backward(c, r);
  const std::string name = "conv_stride" + std::to_string(stride);
  ck.compare_params(name, conv.params(), grads_of(conv.params()), loss);
  ck.compare(name, "x", dx, x, loss);
}

void check_squashed_gaussian(Checker& ck, Rng& rng) {
  const int n = rng.uniform_int(1, 4), a = rng.uniform_int(1, 5);
  M mu = random_mat(n, a, 1.0, rng);
  M raw = random_mat(n, a, 1.0, rng);
  M eps(n, a);
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = rng.normal();
  const M ra = random_mat(n, a, 1.0, rng);
  const M rl = random_mat(n, 1, 1.0, rng);
  const V rlv = rl.col(0);
  auto loss = [&] {
    const auto g = nn::SquashedGaussian<double>::forward(mu, raw, eps);
    return weighted_sum(g.action, ra) + g.log_prob.dot(rlv);
  };
  const auto g = nn::SquashedGaussian<double>::forward(mu, raw, eps);
  const auto [dmu, draw] = g.backward(ra, rlv);
  ck.compare("squashed_gaussian", "mu", dmu, mu, loss);
  ck.compare("squashed_gaussian", "log_std", draw, raw, loss);
}

void check_curl(Checker& ck, Rng& rng) {
  const int n = rng.uniform_int(2, 5), d = rng.uniform_int(1, 5);
  M za = random_mat(n, d, 1.0, rng);
  const M zp = random_mat(n, d, 1.0, rng);
  M w = random_mat(d, d, 1.0, rng);
  auto loss = [&] { return nn::curl_loss(za, zp, w).loss; };
  const auto c = nn::curl_loss(za, zp, w);
  ck.compare("curl", "z_anchor", c.d_anchor, za, loss);
  ck.compare("curl", "W", c.d_w, w, loss);
}

nn::EncoderConfig tiny_encoder(Rng& rng) {
  nn::EncoderConfig e;
  e.input = {rng.uniform_int(1, 3), rng.uniform_int(9, 11), rng.uniform_int(9, 11)};
  e.layers = rng.uniform_int(1, 2);
  e.filters = rng.uniform_int(1, 3);
  e.latent = rng.uniform_int(3, 5);  // layer norm over 2 features is degenerate
  return e;
}

void randomize_norm(nn::LayerNorm<double>& ln, Rng& rng) {
  nn::fill_uniform(ln.gamma.value, 0.5, rng);
  ln.gamma.value.array() += 1.0;
  nn::fill_uniform(ln.beta.value, 0.3, rng);
}

void check_encoder(Checker& ck, Rng& rng) {
  nn::EncoderConfig cfg;
  nn::Encoder<double> enc;
  M x;
  redraw_until([&] {
    cfg = tiny_encoder(rng);
    enc = nn::Encoder<double>("encoder", cfg, rng);
    randomize_norm(enc.ln, rng);
    x = random_mat(rng.uniform_int(1, 3), cfg.input.size(), 1.0, rng);
    x.array() += 1.0;  // pixel-like, nonnegative
    return relu_margin(enc, x) > kKinkMargin;
  });
  const auto n = x.rows();
  const M r = random_mat(n, cfg.latent, 1.0, rng);
  auto loss = [&] { return weighted_sum(enc.forward(x), r); };
  nn::Encoder<double>::Trace tr;
  enc.forward(x, &tr);
  enc.backward(tr, r);
  ck.compare_params("encoder", enc.params(), grads_of(enc.params()), loss);
}

void check_mlp(Checker& ck, Rng& rng) {
  const int n = rng.uniform_int(1, 4), in = rng.uniform_int(1, 5), out = rng.uniform_int(1, 3);
  nn::Mlp<double> mlp;
  M x;
  redraw_until([&] {
    mlp = nn::Mlp<double>("mlp", in, rng.uniform_int(2, 4), rng.uniform_int(1, 2), out, rng);
    x = random_mat(n, in, 1.0, rng);
    return relu_margin(mlp, x) > kKinkMargin;
  });
  const M r = random_mat(n, out, 1.0, rng);
  auto loss = [&] { return weighted_sum(mlp.forward(x), r); };
  nn::Mlp<double>::Trace tr;
  mlp.forward(x, &tr);
  const M dx = mlp.backward(tr, r);
  ck.compare_params("mlp", mlp.params(), grads_of(mlp.params()), loss);
  ck.compare("mlp", "x", dx, x, loss);
}

SacCurlModel<double> tiny_model(Rng& rng) {
  NetworkConfig nc;
  nc.encoder = tiny_encoder(rng);
  nc.action_dim = rng.uniform_int(0, 1) ? 5 : 3;
  nc.hidden = rng.uniform_int(2, 4);
  nc.hidden_layers = 2;
  SacCurlModel<double> m(nc, rng.uniform(0.05, 0.5), rng);
  randomize_norm(m.encoder.ln, rng);
  // Distinct key encoder, as after some polyak steps.
  for (auto* p : m.key_encoder.params()) {
    M noise = random_mat(p->value.rows(), p->value.cols(), 0.05, rng);
    p->value += noise;
  }
  return m;
}

Batch<double> tiny_batch(const NetworkConfig& nc, int n, Rng& rng) {
  const int in = nc.encoder.input.size();
  auto pixels = [&] {
    M m = random_mat(n, in, 0.5, rng);
    m.array() += 0.5;
    return m;
  };
  Batch<double> b;
  b.obs = pixels();
  b.positive = pixels();
  b.next_obs = pixels();
  b.aux = random_mat(n, kAuxDim, 1.0, rng);
  b.next_aux = random_mat(n, kAuxDim, 1.0, rng);
  b.action = random_mat(n, nc.action_dim, 1.0, rng);
  b.reward = random_mat(n, 1, 1.0, rng).col(0);
  b.not_done = V(n);
  for (int i = 0; i < n; ++i) b.not_done(i) = rng.uniform01() < 0.8 ? 1.0 : 0.0;
  return b;
}

M gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
  M m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void check_critic_curl(Checker& ck, Rng& rng) {
  SacCurlModel<double> model;
  Batch<double> b;
  redraw_until([&] {
    model = tiny_model(rng);
    b = tiny_batch(model.cfg, rng.uniform_int(2, 4), rng);
    const M x = hcat(hcat(model.encoder.forward(b.obs), b.aux), b.action);
    return std::min({relu_margin(model.encoder, b.obs), relu_margin(model.q1, x), relu_margin(model.q2, x)}) >
           kKinkMargin;
  });
  const auto n = b.size();
  const V y = model.critic_target(b, gaussian(n, model.action_dim(), rng), 0.99);
  const double w = rng.uniform(0.5, 1.5);

  auto params = model.critic_params();
  for (auto* p : model.encoder_params()) params.push_back(p);
  nn::zero_grads(params);
  model.critic_and_curl(b, y, w);
  const auto analytic = grads_of(params);
  auto loss = [&] {
    const auto l = model.critic_and_curl(b, y, w);
    return l.critic + w * l.curl;
  };
  ck.compare_params("critic_curl", params, analytic, loss);
}

void check_actor_alpha(Checker& ck, Rng& rng) {
  SacCurlModel<double> model;
  M latent, aux, eps;
  redraw_until([&] {
    model = tiny_model(rng);
    const int n = rng.uniform_int(1, 4);
    latent = random_mat(n, model.cfg.encoder.latent, 1.0, rng);
    aux = random_mat(n, kAuxDim, 1.0, rng);
    eps = gaussian(n, model.action_dim(), rng);
    const M feat = hcat(latent, aux);
    const M x = hcat(feat, model.policy(feat, eps).action);
    // The min over the twin critics is a kink too.
    const double gap = (model.q1.forward(x) - model.q2.forward(x)).cwiseAbs().minCoeff();
    return std::min({relu_margin(model.actor, feat), relu_margin(model.q1, x), relu_margin(model.q2, x), gap}) >
           kKinkMargin;
  });
  const double h = -static_cast<double>(model.action_dim());

  auto actor = model.actor.params();
  nn::zero_grads(actor);
  model.log_alpha.zero_grad();
  model.actor_and_alpha(latent, aux, eps, h);
  const auto analytic = grads_of(actor);
  const M dalpha = model.log_alpha.grad;
  ck.compare_params("actor", actor, analytic,
                    [&] { return model.actor_and_alpha(latent, aux, eps, h).actor; });
  ck.compare("alpha", "log_alpha", dalpha, model.log_alpha.value,
             [&] { return model.actor_and_alpha(latent, aux, eps, h).alpha; });
}

}  // namespace

double relative_error(const M& analytic, const M& numeric, double floor) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw std::invalid_argument("gradient shape mismatch");
  }
  const double denom = std::max({analytic.norm(), numeric.norm(), floor});
  return (analytic - numeric).norm() / denom;
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.rel_error);
  return m;
}

const GradCheckEntry& GradCheckReport::worst() const {
  if (entries.empty()) throw std::logic_error("empty gradient check report");
  return *std::max_element(entries.begin(), entries.end(),
                           [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
}

GradCheckReport run_gradcheck(int trials, std::uint64_t seed) {
  GradCheckReport report;
  report.trials = trials;
  Checker ck(report);
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    check_linear(ck, rng);
    check_activations(ck, rng);
    check_layernorm(ck, rng);
    check_conv(ck, rng, 1);
    check_conv(ck, rng, 2);
    check_squashed_gaussian(ck, rng);
    check_curl(ck, rng);
    check_mlp(ck, rng);
    check_encoder(ck, rng);
    check_critic_curl(ck, rng);
    check_actor_alpha(ck, rng);
  }
  return report;
}

void print_gradcheck(std::ostream& out, const GradCheckReport& r) {
  struct Agg {
    double max = 0.0;
    int count = 0;
  };
  std::vector<std::pair<std::string, Agg>> rows;
  for (const auto& e : r.entries) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& p) { return p.first == e.check; });
    if (it == rows.end()) {
      rows.push_back({e.check, {}});
      it = std::prev(rows.end());
    }
    it->second.max = std::max(it->second.max, e.rel_error);
    ++it->second.count;
  }
  out << "gradient check: " << r.trials << " trials, " << r.entries.size() << " tensors\n";
  for (const auto& [name, a] : rows) {
    out << "  " << std::left << std::setw(20) << name << std::scientific << std::setprecision(3) << a.max
        << "  (" << a.count << " tensors)\n";
  }
  if (!r.entries.empty()) {
    const auto& w = r.worst();
    out << "max relative error " << std::scientific << std::setprecision(3) << w.rel_error << " at "
        << w.check << "/" << w.tensor << "\n";
  }
  out << std::defaultfloat;
}

}  // namespace egosearch
