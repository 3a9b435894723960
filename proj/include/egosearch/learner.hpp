#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <vector>

#include "egosearch/env.hpp"
#include "egosearch/policy.hpp"
#include "egosearch/sac_curl.hpp"

namespace egosearch {

struct TrainConfig {
  double gamma = 0.99;
  int batch = 32;
  long total_steps = 750000;
  int replay_capacity = 100000;
  int warmup = 1000;  // uniform-random actions, no updates
  int update_every = 1;
  int actor_update_every = 1;

  nn::AdamConfig actor_opt{1e-3, 0.9, 0.999};
  nn::AdamConfig critic_opt{1e-3, 0.9, 0.999};
  nn::AdamConfig encoder_opt{1e-3, 0.9, 0.999};
  nn::AdamConfig alpha_opt{1e-4, 0.5, 0.999};
  double init_temperature = 0.1;
  double critic_tau = 0.01;
  double encoder_tau = 0.05;
  double curl_weight = 1.0;
  int head_history = 1;
  std::optional<double> target_entropy;  // default: -action_dim

  int conv_layers = 4;
  int filters = 32;
  int latent = 128;
  int hidden = 1024;
  int hidden_layers = 3;

  long eval_every = 5000;
  int eval_episodes = 10;

  // Small-budget preset used by the desk-scale learning runs.
  static TrainConfig toy();
};

// Action dimension seen by the learner: camera deltas are dropped when the
// head is disabled.
inline int learner_action_dim(const EpisodeConfig& cfg) { return cfg.head_enabled ? 5 : 3; }

NetworkConfig network_config(const TrainConfig& tc, const EpisodeConfig& ec);

// Normalised [-1, 1] learner action to a physical action.
Action scale_action(const std::vector<double>& a, const EpisodeConfig& cfg);

inline std::uint8_t quantize_depth(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Mask features and camera joints as one row.
std::array<float, kAuxDim> aux_features(const Observation& obs);

// Transition store. Each slot keeps only the newest frame of its next
// observation plus a link to the previous slot of the same episode; older
// frames of a stack are recovered by walking those links.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int stack, int frame_width, int frame_height, int action_dim);

  // `o` must be the `o_next` of the previous add() unless `episode_start`.
  void add(const Observation& o, const std::vector<double>& action, double reward,
           const Observation& o_next, bool done, bool episode_start);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  long total_added() const { return serial_; }

  // Uniform without replacement; independent random crops for the anchor,
  // the positive, and the next observation.
  Batch<float> sample(int n, int crop_width, int crop_height, Rng& rng) const;

  // Stack (oldest first, K*H*W bytes) at slot `i`, or nullopt when the
  // history has been overwritten.
  std::optional<std::vector<std::uint8_t>> stack(std::size_t i, bool next) const;

  // Slot holding the transition added `age` inserts ago (0 = newest).
  std::size_t slot_from_newest(std::size_t age) const;
  float reward_at(std::size_t i) const { return reward_[i]; }
  bool done_at(std::size_t i) const { return done_[i] != 0; }
  const std::vector<float>& action_at(std::size_t i) const { return action_[i]; }

 private:
  std::size_t frame_bytes() const { return static_cast<std::size_t>(w_) * h_; }
  bool link_valid(std::size_t i) const;

  std::size_t capacity_;
  int stack_, w_, h_, action_dim_;
  std::size_t size_ = 0, head_ = 0;
  long serial_ = 0;
  std::vector<std::uint8_t> next_frame_;
  std::vector<std::vector<std::uint8_t>> first_frame_;  // non-empty at episode starts
  std::vector<long> serial_of_, prev_serial_;
  std::vector<std::int64_t> prev_;
  std::vector<std::array<float, kAuxDim>> aux_, next_aux_;
  std::vector<std::vector<float>> action_;
  std::vector<float> reward_;
  std::vector<std::uint8_t> done_;
  mutable std::mutex mu_;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double curl_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
};

// SAC + CURL agent in single precision.
class SacAgent final : public Policy {
 public:
  SacAgent(const TrainConfig& tc, const EpisodeConfig& ec, std::uint64_t seed);
  // Optimisers hold pointers into the model.
  SacAgent(const SacAgent&) = delete;
  SacAgent& operator=(const SacAgent&) = delete;

  // Deterministic (tanh of the mean, centre crop) unless set_stochastic(true).
  Action act(const Observation& obs, Rng& rng) override;
  std::string name() const override { return "sac-curl"; }
  void set_stochastic(bool on) { stochastic_ = on; }

  // Normalised action in [-1, 1]^A. Stochastic mode samples the squashed
  // Gaussian on a random crop.
  std::vector<double> forward_policy(const Observation& obs, bool stochastic, Rng& rng) const;

  UpdateStats update(const ReplayBuffer& buffer, Rng& rng);

  SacCurlModel<float>& model() { return model_; }
  const SacCurlModel<float>& model() const { return model_; }
  const TrainConfig& train_config() const { return tc_; }
  const EpisodeConfig& episode_config() const { return ec_; }
  long updates() const { return updates_; }
  double target_entropy() const;

  // Flattened K-frame crop of the observation as a policy input row.
  nn::Mat<float> encode_input(const Observation& obs, const CropWindow& win) const;

 private:
  TrainConfig tc_;
  EpisodeConfig ec_;
  SacCurlModel<float> model_;
  nn::Adam<float> actor_opt_, critic_opt_, encoder_opt_, alpha_opt_;
  long updates_ = 0;
  bool stochastic_ = false;
};

struct CurveRow {
  long step = 0;
  double success_rate = 0.0;
  double episode_return = 0.0;  // mean over training episodes since the last row
  UpdateStats losses;           // last update before the row
};

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve);
std::vector<CurveRow> read_curve_csv(std::istream& in);

// Scenes drawn (uniformly, one per episode) for training.
struct TrainEnvSpec {
  std::vector<std::shared_ptr<const Scene>> scenes;
  SceneParams params;
  EpisodeConfig episode;
};

// Episodic environment driven by the training loop.
class TrainingEnv {
 public:
  virtual ~TrainingEnv() = default;
  virtual const Observation& reset() = 0;
  virtual StepResult step(const Action& a) = 0;
  virtual const Observation& observation() const = 0;
  virtual bool done() const = 0;
};

// Env over a scene suite, drawing one scene per episode.
class SceneSuiteEnv final : public TrainingEnv {
 public:
  SceneSuiteEnv(const TrainEnvSpec& spec, Rng& rng);
  const Observation& reset() override;
  StepResult step(const Action& a) override { return env_.step(a); }
  const Observation& observation() const override { return env_.observation(); }
  bool done() const override { return env_.done(); }

 private:
  std::vector<std::shared_ptr<const Scene>> scenes_;
  Env env_;
  Rng scene_rng_;
};

// Builds the environment once the agent has taken its seed from `rng`.
using TrainingEnvFactory = std::function<std::unique_ptr<TrainingEnv>(Rng& rng)>;

// Success rate of a deterministic policy; called every eval_every steps.
using Evaluator = std::function<double(Policy&)>;

struct TrainResult {
  std::unique_ptr<SacAgent> agent;
  std::vector<CurveRow> curve;
  long episodes = 0;
};

TrainResult train(const TrainingEnvFactory& make_env, const EpisodeConfig& episode,
                  const TrainConfig& cfg, std::uint64_t seed, const Evaluator& evaluate,
                  std::ostream* log = nullptr);
TrainResult train(const TrainEnvSpec& spec, const TrainConfig& cfg, std::uint64_t seed,
                  const Evaluator& evaluate, std::ostream* log = nullptr);

}  // namespace egosearch
