#include "egosearch/learner.hpp"

#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace egosearch {

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.total_steps = 50000;
  c.replay_capacity = 50000;
  c.filters = 16;
  c.latent = 64;
  c.hidden = 256;
  c.hidden_layers = 3;
  c.eval_every = 5000;
  c.eval_episodes = 20;
  return c;
}

NetworkConfig network_config(const TrainConfig& tc, const EpisodeConfig& ec) {
  NetworkConfig n;
  n.encoder.input = {ec.stack, ec.crop_height, ec.crop_width};
  n.encoder.layers = tc.conv_layers;
  n.encoder.filters = tc.filters;
  n.encoder.latent = tc.latent;
  n.action_dim = learner_action_dim(ec);
  n.hidden = tc.hidden;
  n.hidden_layers = tc.hidden_layers;
  return n;
}

Action scale_action(const std::vector<double>& a, const EpisodeConfig& cfg) {
  const int dim = learner_action_dim(cfg);
  if (static_cast<int>(a.size()) != dim) throw std::invalid_argument("action dimension mismatch");
  const auto bounds = cfg.action_bounds.as_array();
  std::array<double, kActionDim> v{};
  for (int i = 0; i < dim; ++i) v[i] = std::clamp(a[i], -1.0, 1.0) * bounds[i];
  return Action::from_array(v);
}

std::array<float, kAuxDim> aux_features(const Observation& obs) {
  std::array<float, kAuxDim> out{};
  const auto m = obs.mask.to_vector();
  for (int i = 0; i < kMaskFeatureDim; ++i) out[i] = static_cast<float>(m[i]);
  out[kMaskFeatureDim] = static_cast<float>(obs.q_pitch);
  out[kMaskFeatureDim + 1] = static_cast<float>(obs.q_yaw);
  return out;
}

// ---------------------------------------------------------------- replay

ReplayBuffer::ReplayBuffer(std::size_t capacity, int stack, int frame_width, int frame_height,
                           int action_dim)
    : capacity_(capacity), stack_(stack), w_(frame_width), h_(frame_height), action_dim_(action_dim) {
  if (capacity == 0 || stack < 1 || frame_width < 1 || frame_height < 1) {
    throw std::invalid_argument("replay buffer: bad shape");
  }
  next_frame_.resize(capacity * frame_bytes());
  first_frame_.resize(capacity);
  serial_of_.assign(capacity, -1);
  prev_serial_.assign(capacity, -1);
  prev_.assign(capacity, -1);
  aux_.resize(capacity);
  next_aux_.resize(capacity);
  action_.resize(capacity);
  reward_.resize(capacity);
  done_.resize(capacity);
}

namespace {

void quantize_into(const DepthImage& img, std::uint8_t* dst) {
  for (double v : img.pixels) *dst++ = quantize_depth(v);
}

}  // namespace

void ReplayBuffer::add(const Observation& o, const std::vector<double>& action, double reward,
                       const Observation& o_next, bool done, bool episode_start) {
  std::lock_guard lock(mu_);
  const DepthImage& f = o_next.depth.back();
  if (f.width != w_ || f.height != h_ || o.depth.back().width != w_ ||
      o.depth.back().height != h_) {
    throw std::invalid_argument("replay buffer: frame size mismatch");
  }
  if (static_cast<int>(action.size()) != action_dim_) {
    throw std::invalid_argument("replay buffer: action dimension mismatch");
  }
  const std::size_t slot = head_;
  if (episode_start) {
    prev_[slot] = -1;
    prev_serial_[slot] = -1;
    first_frame_[slot].resize(frame_bytes());
    quantize_into(o.depth.back(), first_frame_[slot].data());
  } else {
    if (serial_ == 0) throw std::logic_error("replay buffer: continuation without a start");
    const std::size_t last = (head_ + capacity_ - 1) % capacity_;
    prev_[slot] = static_cast<std::int64_t>(last);
    prev_serial_[slot] = serial_of_[last];
    first_frame_[slot].clear();
  }
  serial_of_[slot] = serial_++;
  quantize_into(f, next_frame_.data() + slot * frame_bytes());
  aux_[slot] = aux_features(o);
  next_aux_[slot] = aux_features(o_next);
  action_[slot].assign(action.begin(), action.end());
  reward_[slot] = static_cast<float>(reward);
  done_[slot] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::slot_from_newest(std::size_t age) const {
  if (age >= size_) throw std::out_of_range("replay buffer: age beyond size");
  return (head_ + capacity_ - 1 - age) % capacity_;
}

bool ReplayBuffer::link_valid(std::size_t i) const {
  return prev_[i] >= 0 && serial_of_[static_cast<std::size_t>(prev_[i])] == prev_serial_[i];
}

std::optional<std::vector<std::uint8_t>> ReplayBuffer::stack(std::size_t i, bool next) const {
  if (i >= size_) throw std::out_of_range("replay buffer: slot out of range");
  std::vector<const std::uint8_t*> frames;  // newest first
  if (next) frames.push_back(next_frame_.data() + i * frame_bytes());
  std::size_t cur = i;
  while (static_cast<int>(frames.size()) < stack_) {
    if (prev_[cur] < 0) {
      const std::uint8_t* first = first_frame_[cur].data();
      while (static_cast<int>(frames.size()) < stack_) frames.push_back(first);
      break;
    }
    if (!link_valid(cur)) return std::nullopt;
    cur = static_cast<std::size_t>(prev_[cur]);
    frames.push_back(next_frame_.data() + cur * frame_bytes());
  }
  std::vector<std::uint8_t> out(frames.size() * frame_bytes());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    std::copy_n(frames[frames.size() - 1 - k], frame_bytes(), out.data() + k * frame_bytes());
  }
  return out;
}

namespace {

void crop_row(const std::vector<std::uint8_t>& stack, int frames, int w, int h,
              const CropWindow& win, float* dst) {
  const float scale = 1.0f / 255.0f;
  for (int k = 0; k < frames; ++k) {
    const std::uint8_t* f = stack.data() + static_cast<std::size_t>(k) * w * h;
    for (int r = 0; r < win.height; ++r) {
      const std::uint8_t* line = f + static_cast<std::size_t>(win.y0 + r) * w + win.x0;
      for (int c = 0; c < win.width; ++c) *dst++ = static_cast<float>(line[c]) * scale;
    }
  }
}

}  // namespace

Batch<float> ReplayBuffer::sample(int n, int crop_width, int crop_height, Rng& rng) const {
  std::lock_guard lock(mu_);
  if (n < 1 || static_cast<std::size_t>(n) > size_) {
    throw std::invalid_argument("replay buffer: not enough transitions to sample");
  }
  std::vector<std::size_t> picked;
  std::vector<std::vector<std::uint8_t>> obs, next;
  std::set<std::size_t> seen;
  for (int attempts = 0; static_cast<int>(picked.size()) < n; ++attempts) {
    if (attempts > 100 * n + 1000) throw std::runtime_error("replay buffer: cannot assemble batch");
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(size_) - 1));
    if (seen.contains(i)) continue;
    auto s = stack(i, false);
    auto s2 = stack(i, true);
    if (!s || !s2) continue;
    seen.insert(i);
    picked.push_back(i);
    obs.push_back(std::move(*s));
    next.push_back(std::move(*s2));
  }
  const int cols = stack_ * crop_width * crop_height;
  Batch<float> b;
  b.obs.resize(n, cols);
  b.positive.resize(n, cols);
  b.next_obs.resize(n, cols);
  b.aux.resize(n, kAuxDim);
  b.next_aux.resize(n, kAuxDim);
  b.action.resize(n, action_dim_);
  b.reward.resize(n);
  b.not_done.resize(n);
  for (int r = 0; r < n; ++r) {
    const std::size_t i = picked[static_cast<std::size_t>(r)];
    crop_row(obs[r], stack_, w_, h_, random_window(w_, h_, crop_width, crop_height, rng),
             b.obs.row(r).data());
    crop_row(obs[r], stack_, w_, h_, random_window(w_, h_, crop_width, crop_height, rng),
             b.positive.row(r).data());
    crop_row(next[r], stack_, w_, h_, random_window(w_, h_, crop_width, crop_height, rng),
             b.next_obs.row(r).data());
    for (int k = 0; k < kAuxDim; ++k) {
      b.aux(r, k) = aux_[i][k];
      b.next_aux(r, k) = next_aux_[i][k];
    }
    for (int k = 0; k < action_dim_; ++k) b.action(r, k) = action_[i][k];
    b.reward(r) = reward_[i];
    b.not_done(r) = done_[i] ? 0.0f : 1.0f;
  }
  return b;
}

// ---------------------------------------------------------------- agent

SacAgent::SacAgent(const TrainConfig& tc, const EpisodeConfig& ec, std::uint64_t seed)
    : tc_(tc), ec_(ec) {
  Rng rng(seed);
  model_ = SacCurlModel<float>(network_config(tc, ec), tc.init_temperature, rng);
  actor_opt_ = nn::Adam<float>(model_.actor.params(), tc.actor_opt);
  critic_opt_ = nn::Adam<float>(model_.critic_params(), tc.critic_opt);
  encoder_opt_ = nn::Adam<float>(model_.encoder_params(), tc.encoder_opt);
  alpha_opt_ = nn::Adam<float>({&model_.log_alpha}, tc.alpha_opt);
}

double SacAgent::target_entropy() const {
  return tc_.target_entropy.value_or(-static_cast<double>(model_.action_dim()));
}

nn::Mat<float> SacAgent::encode_input(const Observation& obs, const CropWindow& win) const {
  if (static_cast<int>(obs.depth.size()) != ec_.stack) {
    throw std::invalid_argument("observation stack length differs from K");
  }
  nn::Mat<float> x(1, static_cast<Eigen::Index>(ec_.stack) * win.width * win.height);
  float* dst = x.data();
  const float scale = 1.0f / 255.0f;
  for (const DepthImage& d : obs.depth) {
    if (win.x0 + win.width > d.width || win.y0 + win.height > d.height) {
      throw CropError("observation frame smaller than the crop");
    }
    for (int r = 0; r < win.height; ++r) {
      for (int c = 0; c < win.width; ++c) {
        *dst++ = static_cast<float>(quantize_depth(d.at(win.x0 + c, win.y0 + r))) * scale;
      }
    }
  }
  return x;
}

std::vector<double> SacAgent::forward_policy(const Observation& obs, bool stochastic,
                                             Rng& rng) const {
  const DepthImage& f = obs.depth.back();
  const CropWindow win =
      stochastic ? random_window(f.width, f.height, ec_.crop_width, ec_.crop_height, rng)
                 : center_window(f.width, f.height, ec_.crop_width, ec_.crop_height);
  const nn::Mat<float> x = encode_input(obs, win);
  const auto aux_arr = aux_features(obs);
  nn::Mat<float> aux(1, kAuxDim);
  for (int k = 0; k < kAuxDim; ++k) aux(0, k) = aux_arr[k];
  const int dim = model_.action_dim();
  nn::Mat<float> a;
  if (stochastic) {
    nn::Mat<float> eps(1, dim);
    for (int k = 0; k < dim; ++k) eps(0, k) = static_cast<float>(rng.normal());
    a = model_.policy(hcat(model_.encoder.forward(x), aux), eps).action;
  } else {
    a = model_.mean_action(x, aux);
  }
  nn::require_finite(a, "policy output");
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) out[k] = a(0, k);
  return out;
}

Action SacAgent::act(const Observation& obs, Rng& rng) {
  return scale_action(forward_policy(obs, stochastic_, rng), ec_);
}

namespace {

void check_loss(double v, const char* what, long update) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite " << what << " loss at update " << update;
    throw nn::NonFiniteError(msg.str());
  }
}

}  // namespace

UpdateStats SacAgent::update(const ReplayBuffer& buffer, Rng& rng) {
  const Batch<float> b = buffer.sample(tc_.batch, ec_.crop_width, ec_.crop_height, rng);
  const int n = tc_.batch, dim = model_.action_dim();
  auto noise = [&] {
    nn::Mat<float> e(n, dim);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = static_cast<float>(rng.normal());
    return e;
  };
  UpdateStats st;
  const nn::Vec<float> y = model_.critic_target(b, noise(), tc_.gamma);
  critic_opt_.zero_grad();
  encoder_opt_.zero_grad();
  const auto cc = model_.critic_and_curl(b, y, tc_.curl_weight);
  st.critic_loss = cc.critic;
  st.curl_loss = cc.curl;
  check_loss(st.critic_loss, "critic", updates_);
  check_loss(st.curl_loss, "contrastive", updates_);
  critic_opt_.step();
  encoder_opt_.step();

  if (updates_ % tc_.actor_update_every == 0) {
    actor_opt_.zero_grad();
    alpha_opt_.zero_grad();
    const auto aa = model_.actor_and_alpha(cc.latent, b.aux, noise(), target_entropy());
    st.actor_loss = aa.actor;
    st.alpha_loss = aa.alpha;
    st.entropy = aa.entropy;
    check_loss(st.actor_loss, "actor", updates_);
    check_loss(st.alpha_loss, "temperature", updates_);
    actor_opt_.step();
    alpha_opt_.step();
  }
  model_.soft_update(tc_.critic_tau, tc_.encoder_tau);
  st.alpha = model_.alpha();
  ++updates_;
  return st;
}

// ---------------------------------------------------------------- curves

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve) {
  out << "step,success_rate,episode_return,critic_loss,actor_loss,alpha_loss,curl_loss,alpha,"
         "entropy\n";
  const auto old = out.precision(10);
  for (const CurveRow& r : curve) {
    const UpdateStats& l = r.losses;
    out << r.step << ',' << r.success_rate << ',' << r.episode_return << ',' << l.critic_loss << ','
        << l.actor_loss << ',' << l.alpha_loss << ',' << l.curl_loss << ',' << l.alpha << ','
        << l.entropy << '\n';
  }
  out.precision(old);
}

std::vector<CurveRow> read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,success_rate", 0) != 0) {
    throw std::runtime_error("training curve: missing header");
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 9) throw std::runtime_error("training curve: bad row '" + line + "'");
    CurveRow r;
    r.step = static_cast<long>(v[0]);
    r.success_rate = v[1];
    r.episode_return = v[2];
    r.losses = {v[3], v[4], v[5], v[6], v[7], v[8]};
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- training

namespace {

std::shared_ptr<const Scene> first_scene(const TrainEnvSpec& spec) {
  if (spec.scenes.empty()) throw std::invalid_argument("train: no scenes");
  return spec.scenes.front();
}

}  // namespace

SceneSuiteEnv::SceneSuiteEnv(const TrainEnvSpec& spec, Rng& rng)
    : scenes_(spec.scenes),
      env_(first_scene(spec), spec.episode, spec.params, rng.next_u64()),
      scene_rng_(rng.fork()) {}

const Observation& SceneSuiteEnv::reset() {
  const int k = scene_rng_.uniform_int(0, static_cast<int>(scenes_.size()) - 1);
  env_.set_scene(scenes_[static_cast<std::size_t>(k)]);
  return env_.reset();
}

TrainResult train(const TrainEnvSpec& spec, const TrainConfig& cfg, std::uint64_t seed,
                  const Evaluator& evaluate, std::ostream* log) {
  first_scene(spec);
  return train([&](Rng& rng) { return std::make_unique<SceneSuiteEnv>(spec, rng); }, spec.episode, cfg,
               seed, evaluate, log);
}

TrainResult train(const TrainingEnvFactory& make_env, const EpisodeConfig& ec, const TrainConfig& cfg,
                  std::uint64_t seed, const Evaluator& evaluate, std::ostream* log) {
  if (cfg.batch < 2) throw std::invalid_argument("train: batch must be at least 2");
  Rng rng(seed);
  TrainResult result;
  result.agent = std::make_unique<SacAgent>(cfg, ec, rng.next_u64());
  SacAgent& agent = *result.agent;
  const int dim = learner_action_dim(ec);
  const auto capacity = static_cast<std::size_t>(
      std::max<long>(cfg.batch, std::min<long>(cfg.replay_capacity, cfg.total_steps)));
  ReplayBuffer buffer(capacity, ec.stack, ec.render_width, ec.render_height, dim);
  const std::unique_ptr<TrainingEnv> env_ptr = make_env(rng);
  TrainingEnv& env = *env_ptr;
  Rng act_rng = rng.fork(), update_rng = rng.fork();

  auto new_episode = [&]() -> Observation { return env.reset(); };
  Observation obs = new_episode();
  bool episode_start = true;
  double episode_return = 0.0;
  std::vector<double> returns;
  UpdateStats last;

  for (long step = 0; step < cfg.total_steps; ++step) {
    std::vector<double> a(static_cast<std::size_t>(dim));
    if (step < cfg.warmup) {
      for (double& v : a) v = act_rng.uniform(-1.0, 1.0);
    } else {
      a = agent.forward_policy(obs, true, act_rng);
    }
    const StepResult r = env.step(scale_action(a, ec));
    // Timeouts bootstrap; only success ends the return.
    const bool success = r.termination == Termination::Success;
    buffer.add(obs, a, r.reward.total, env.observation(), success, episode_start);
    episode_return += r.reward.total;
    episode_start = false;
    obs = env.observation();
    if (env.done()) {
      returns.push_back(episode_return);
      episode_return = 0.0;
      ++result.episodes;
      obs = new_episode();
      episode_start = true;
    }
    if (step + 1 >= cfg.warmup && (step + 1) % cfg.update_every == 0 &&
        buffer.size() >= static_cast<std::size_t>(cfg.batch)) {
      last = agent.update(buffer, update_rng);
    }
    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.total_steps) {
      CurveRow row;
      row.step = step + 1;
      row.success_rate = evaluate ? evaluate(agent) : 0.0;
      row.episode_return =
          returns.empty() ? 0.0
                          : std::accumulate(returns.begin(), returns.end(), 0.0) /
                                static_cast<double>(returns.size());
      row.losses = last;
      returns.clear();
      result.curve.push_back(row);
      if (log != nullptr) {
        *log << "step " << row.step << " success " << row.success_rate << " return "
             << row.episode_return << " critic " << last.critic_loss << " curl " << last.curl_loss
             << " alpha " << last.alpha << std::endl;
      }
    }
  }
  return result;
}

}  // namespace egosearch
