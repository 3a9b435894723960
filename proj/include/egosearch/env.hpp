#pragma once

#include <array>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "egosearch/rng.hpp"
#include "egosearch/scene.hpp"
#include "egosearch/sensor.hpp"

namespace egosearch {

inline constexpr int kActionDim = 5;

struct Action {
  double dx = 0.0;  // forward, body frame
  double dy = 0.0;  // lateral (left), body frame
  double dtheta = 0.0;
  double dq_pitch = 0.0;
  double dq_yaw = 0.0;

  std::array<double, kActionDim> to_array() const { return {dx, dy, dtheta, dq_pitch, dq_yaw}; }
  static Action from_array(const std::array<double, kActionDim>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  bool operator==(const Action&) const = default;
};

struct ActionBounds {
  double translate = 0.25;
  double rotate = deg2rad(30.0);
  double camera = deg2rad(30.0);

  std::array<double, kActionDim> as_array() const {
    return {translate, translate, rotate, camera, camera};
  }
};

struct JointLimits {
  double pitch = deg2rad(60.0);
  double yaw = deg2rad(90.0);
};

struct EpisodeConfig {
  int t_max = 100;
  double success_radius = 0.5;
  std::array<double, 5> weights{1.0, 1.0, 1.0, 0.1, 1.0};
  double success_reward = 10.0;
  double terminal_bonus = 10.0;
  double live_penalty = -0.1;
  double collision_step = -0.1;
  double collision_floor = -3.0;
  int stack = 5;

  bool randomize_height = true;
  double height_min = 1.0;
  double height_max = 1.8;
  bool height_noise = true;
  double height_noise_range = 0.1;

  ActionBounds action_bounds;
  JointLimits joint_limits;
  bool head_enabled = true;

  int render_width = 100;
  int render_height = 100;
  int crop_width = 84;
  int crop_height = 84;

  double agent_radius = 0.3;
  double contact_epsilon = 1e-3;
  TargetMode target_mode = TargetMode::Everywhere;
};

struct AbstractState {
  double x = 0.0, y = 0.0;
  double body_yaw = 0.0;
  double q_pitch = 0.0, q_yaw = 0.0;
  double base_height = 1.65;
  double height_noise = 0.0;
  int n_col = 0;
  int t = 0;
  bool found = false;

  Vec2 position() const { return {x, y}; }
  bool operator==(const AbstractState&) const = default;
};

CameraPose camera_pose(const AbstractState& s);

// Depth frames are kept oldest-first; `depth.size() == stack`.
struct Observation {
  std::vector<DepthImage> depth;
  MaskFeature mask;
  double q_pitch = 0.0;
  double q_yaw = 0.0;
  bool operator==(const Observation&) const = default;
};

Action clamp_action(const Action& a, const EpisodeConfig& cfg);

// Camera-joint half of the transition: add deltas, clamp to joint limits.
void advance_camera(AbstractState& s, const Action& clamped, const EpisodeConfig& cfg);

struct StepInfo {
  bool contact = false;
  Vec2 attempted = Vec2::Zero();  // requested world-frame translation
};

// Kinematic transition. `found` is left for the caller (needs a render).
AbstractState step_state(const Scene& scene, const AbstractState& s, const Action& a, Rng& rng,
                         const EpisodeConfig& cfg, StepInfo* info = nullptr);

// Renders the current frame and pushes it onto `prev` (or fills the stack on
// the first call). With CropMode::None the stack keeps full-resolution frames.
Observation observe(const Scene& scene, const AbstractState& s, const Observation* prev,
                    const EpisodeConfig& cfg, CropMode crop = CropMode::None,
                    Rng* rng = nullptr);

// Pushes a pre-rendered frame into a stack.
Observation push_frame(const Observation* prev, DepthImage frame, const MaskFeature& mask,
                       const AbstractState& s, int stack);

struct RewardTerms {
  double success = 0.0;
  double distance = 0.0;
  double live = 0.0;
  double collision = 0.0;
  double terminal = 0.0;
  double total = 0.0;

  std::array<double, 5> as_array() const { return {success, distance, live, collision, terminal}; }
};

double planar_distance_to_target(const Scene& scene, const AbstractState& s);

RewardTerms compute_reward(const Scene& scene, const AbstractState& s_next, bool target_visible,
                           bool terminal_success, const EpisodeConfig& cfg);

enum class Termination { None, Success, Timeout };
const char* to_string(Termination t);

Termination is_terminal(const Scene& scene, const AbstractState& s, bool target_visible,
                        const EpisodeConfig& cfg);

struct StepResult {
  RewardTerms reward;
  Termination termination = Termination::None;
  StepInfo info;
};

// One episode environment over a shared static scene. Single-threaded.
class Env {
 public:
  Env(std::shared_ptr<const Scene> base, EpisodeConfig cfg, SceneParams params, std::uint64_t seed);

  // Samples target and agent. `fixed_height` disables height randomisation.
  const Observation& reset(std::optional<double> fixed_height = std::nullopt,
                           std::optional<TargetMode> mode = std::nullopt);
  // Starts from an explicit scenario instead of sampling one.
  const Observation& reset_to(const Vec3& target, const Pose2& agent, double base_height);

  StepResult step(const Action& a);

  // Swaps the static scene; the next reset() samples within it.
  void set_scene(std::shared_ptr<const Scene> base);

  const Scene& scene() const { return scene_; }
  const AbstractState& state() const { return state_; }
  const Observation& observation() const { return obs_; }
  const EpisodeConfig& config() const { return cfg_; }
  bool done() const { return done_; }
  Rng& rng() { return rng_; }

 private:
  const Observation& start(const AbstractState& s);

  std::shared_ptr<const Scene> base_;
  Scene scene_;
  EpisodeConfig cfg_;
  SceneParams params_;
  Rng rng_;
  AbstractState state_;
  Observation obs_;
  bool done_ = true;
};

// Per-step episode trace, written as delimited text.
struct TraceRecord {
  AbstractState state;
  Action action;
  RewardTerms reward;
  Termination termination = Termination::None;
};

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

}  // namespace egosearch
