#pragma once

#include <limits>
#include <ostream>
#include <vector>

#include "egosearch/env.hpp"
#include "egosearch/policy.hpp"

namespace egosearch {

struct PlanBuffer {
  std::vector<AbstractState> states;  // s_0 .. s_T
  std::vector<Action> actions;        // a_0 .. a_{T-1}
  int steps() const { return static_cast<int>(states.size()) - 1; }
};

struct CharacterPose {
  double x = 0.0, y = 0.0, yaw = 0.0, height = 1.65;
  double head_pitch = 0.0, head_yaw = 0.0;
  bool operator==(const CharacterPose&) const = default;
};

class MotionGenerator {
 public:
  virtual ~MotionGenerator() = default;
  // Best-effort tracking of plan states 1..M starting from `current`.
  virtual std::vector<CharacterPose> generate(const PlanBuffer& plan, const CharacterPose& current,
                                              int m) = 0;
  virtual void reset() {}
};

struct MockCharacterParams {
  double lag = 0.7;              // fraction of the gap closed per step, (0, 1]
  double bob_amplitude = 0.05;   // m
  double bob_frequency = 0.25;   // cycles per step
  double max_speed = std::numeric_limits<double>::infinity();  // m per step
  double base_height = 1.65;

  static MockCharacterParams perfect(double base_height = 1.65) {
    return {1.0, 0.0, 0.0, std::numeric_limits<double>::infinity(), base_height};
  }
};

// Kinematic stand-in for a learned motion generator: first-order lag on the
// root, sinusoidal head bob, optional speed cap.
class MockCharacter final : public MotionGenerator {
 public:
  explicit MockCharacter(MockCharacterParams p = {});
  std::vector<CharacterPose> generate(const PlanBuffer& plan, const CharacterPose& current,
                                      int m) override;
  void reset() override { step_ = 0; }
  long steps() const { return step_; }
  const MockCharacterParams& params() const { return p_; }

 private:
  MockCharacterParams p_;
  long step_ = 0;  // global pose counter, drives the bob phase
};

CharacterPose pose_from_state(const AbstractState& s);

// Rolls the abstract model forward T steps from (s0, o0); stops early when an
// episode would terminate.
PlanBuffer plan(Policy& policy, const Scene& scene, const AbstractState& s0, const Observation& o0,
                int horizon, const EpisodeConfig& cfg, Rng& rng);

struct ReconcileResult {
  AbstractState state;
  Observation obs;
  std::vector<CharacterPose> poses;  // heads overwritten
  std::vector<AbstractState> states; // corrected state per executed pose
  std::vector<Observation> observations;
  std::vector<Action> commands;      // policy queries, one per pose
  int renders = 0;
};

// Re-renders the executed poses, refilling the depth history, and replaces the
// head pose of each with the policy's camera command.
ReconcileResult reconcile(Policy& policy, const Scene& scene, const std::vector<CharacterPose>& poses,
                          const AbstractState& s, const Observation& o, const EpisodeConfig& cfg,
                          Rng& rng);

struct FullBodyConfig {
  int horizon = 20;       // T
  int execute = 5;        // M
  int step_budget = 100;  // executed poses per episode
  double body_radius = 0.3;
  double body_height = 1.8;
};

struct FrameRecord {
  int step = 0;
  int attempt = 0;
  CharacterPose pose;
  AbstractState state;
  std::uint64_t depth_digest = 0;
  bool visible = false;
  bool penetrating = false;
};

struct EpisodeMetrics {
  bool success = false;
  double path_length = 0.0;
  int attempts = 0;
  int penetrations = 0;
  int steps = 0;
};

struct FullBodyEpisode {
  std::vector<FrameRecord> frames;
  std::vector<int> segment_lengths;
  // Steps in each plan; shorter than T when the rollout reached a terminal state.
  std::vector<int> plan_lengths;
  // Depth stack handed to each plan() call, and the corrected states that
  // produced it (for history audits).
  std::vector<Observation> plan_inputs;
  std::vector<std::vector<AbstractState>> plan_input_states;
  EpisodeMetrics metrics;
};

// Replanning loop: plan T steps, execute M through the motion generator, reconcile,
// repeat until success or the step budget.
FullBodyEpisode run_episode_fullbody(Policy& policy, MotionGenerator& mg, const Scene& scene,
                                     const AbstractState& s0, const EpisodeConfig& cfg,
                                     const FullBodyConfig& fb, Rng& rng);

// Baseline: one policy query per cycle, extruded into a straight-line plan of
// `horizon` steps and executed without re-rendering in between.
FullBodyEpisode one_step_controller(Policy& policy, MotionGenerator& mg, const Scene& scene,
                                    const AbstractState& s0, const EpisodeConfig& cfg,
                                    const FullBodyConfig& fb, int horizon, Rng& rng);

// Baseline: random actions until the target is seen, then the policy; run as a
// closed loop with T = M = 1.
FullBodyEpisode noisy_search_controller(Policy& policy, MotionGenerator& mg, const Scene& scene,
                                        const AbstractState& s0, const EpisodeConfig& cfg,
                                        const FullBodyConfig& fb, Rng& rng);

// 64-bit FNV-1a over quantised depth values.
std::uint64_t depth_digest(const DepthImage& img);

void write_trajectory_csv(std::ostream& out, const std::vector<FrameRecord>& frames);
std::vector<FrameRecord> read_trajectory_csv(std::istream& in);

}  // namespace egosearch
