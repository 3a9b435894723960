#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "egosearch/env.hpp"
#include "egosearch/learner.hpp"
#include "egosearch/policy.hpp"
#include "egosearch/replan.hpp"

namespace egosearch {

struct SplItem {
  bool success = false;
  double shortest = 0.0;  // ell_i
  double taken = 0.0;     // p_i
};

// 1/N sum S_i * ell_i / max(p_i, ell_i).
double spl(const std::vector<SplItem>& items);

struct Scenario {
  std::uint64_t scene_seed = 0;
  Pose2 agent;
  Vec3 target = Vec3::Zero();
  TargetMode mode = TargetMode::Everywhere;
};

// Scenes are regenerated from seeds; scenarios are drawn with the same
// initial-state distribution as Env::reset.
struct ScenarioSet {
  SceneParams params;
  std::vector<Scenario> items;

  std::size_t size() const { return items.size(); }
};

// Seeds of a fixed room suite: base, base+1, ...
std::vector<std::uint64_t> suite_seeds(std::uint64_t base, int count);

ScenarioSet make_scenarios(const std::vector<std::uint64_t>& scene_seeds, int count, TargetMode mode,
                           const SceneParams& params, std::uint64_t seed);

// Generated scenes by seed, built once and then shared read-only.
class SceneCache {
 public:
  explicit SceneCache(SceneParams params) : params_(std::move(params)) {}
  std::shared_ptr<const Scene> get(std::uint64_t seed);
  void preload(const std::vector<std::uint64_t>& seeds);
  const SceneParams& params() const { return params_; }

 private:
  SceneParams params_;
  std::map<std::uint64_t, std::shared_ptr<const Scene>> scenes_;
  std::mutex mu_;
};

// Reference path length ell for a scenario: shortest free-space path to the
// nearest free cell of the target, less the part of the success disc it
// overlaps; at least one grid cell.
double reference_path_length(const Scene& scene, const Vec2& start, const Vec3& target,
                             double success_radius);

struct ScenarioResult {
  std::size_t index = 0;
  bool success = false;
  int steps = 0;
  double path_length = 0.0;
  double shortest = 0.0;
  int attempts = 0;
  int collisions = 0;
};

struct EvalReport {
  std::string label;
  double success_rate = 0.0;
  double spl = 0.0;
  double mean_attempts = 0.0;
  double mean_collisions = 0.0;
  std::vector<ScenarioResult> rows;
};

EvalReport summarize(std::string label, std::vector<ScenarioResult> rows);

struct EvalOptions {
  int workers = 1;
  std::uint64_t seed = 0;  // per-scenario rng streams derive from this
};

// Abstract-model episodes at a fixed camera height with a deterministic policy.
// `policy` must tolerate concurrent act() calls when workers > 1.
EvalReport evaluate_policy(Policy& policy, const ScenarioSet& scenarios, SceneCache& scenes,
                           const EpisodeConfig& cfg, double height, const EvalOptions& opt = {});

inline const std::vector<double>& table_heights() {
  static const std::vector<double> h{1.65, 1.05, 0.45};
  return h;
}

struct HeightCell {
  double height = 0.0;
  TargetMode mode = TargetMode::ExcludeCabinets;
  double success_rate = 0.0;
  double spl = 0.0;
};

struct HeightTable {
  std::vector<HeightCell> cells;  // heights x modes, row-major
  const HeightCell& at(double height, TargetMode mode) const;
};

HeightTable height_sweep(Policy& policy, const ScenarioSet& exclude_cabinets,
                         const ScenarioSet& everywhere, SceneCache& scenes, const EpisodeConfig& cfg,
                         const std::vector<double>& heights = table_heights(),
                         const EvalOptions& opt = {});

void write_height_table_csv(std::ostream& out, const HeightTable& t);
HeightTable read_height_table_csv(std::istream& in);
// Plain-text grid: one row per height, one column per target mode.
void write_height_table_text(std::ostream& out, const HeightTable& t);

struct AblationRun {
  std::uint64_t seed = 0;
  bool head = true;
  std::vector<CurveRow> curve;
  EvalReport final_eval;
  std::shared_ptr<SacAgent> agent;
};

// Trains one head-enabled and one head-disabled agent per seed with identical
// budgets, then evaluates each on `scenarios`.
std::vector<AblationRun> ablate_head(const TrainEnvSpec& spec, const TrainConfig& tc,
                                     const std::vector<std::uint64_t>& seeds,
                                     const ScenarioSet& curve_scenarios,
                                     const ScenarioSet& final_scenarios, SceneCache& scenes,
                                     double eval_height, const EvalOptions& opt = {},
                                     std::ostream* log = nullptr);

struct BaselineConfig {
  std::string name;
  enum class Kind { Ours, OneStep, NoisySearch } kind = Kind::Ours;
  int execute = 5;   // M for Ours
  int horizon = 20;  // T for Ours, extrusion length for OneStep
};

std::vector<BaselineConfig> default_baselines(const std::vector<int>& m_values, int horizon,
                                              int one_step_short, int one_step_long);

struct BaselineReport {
  std::vector<EvalReport> configs;  // one per BaselineConfig, same order
};

// Full-body episodes through the mock character for every configuration and
// scenario.
BaselineReport compare_baselines(Policy& policy, const MockCharacterParams& mock,
                                 const ScenarioSet& scenarios, SceneCache& scenes,
                                 const EpisodeConfig& cfg, const FullBodyConfig& fb,
                                 const std::vector<BaselineConfig>& configs,
                                 const EvalOptions& opt = {});

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports);
void write_summary_text(std::ostream& out, const std::vector<EvalReport>& reports);

// One-dimensional seek task: the agent slides along a line toward a target
// whose signed offset appears as the mask centroid x_c. Depth frames are
// constant, so only the mask path carries information. Used to check that the
// learner learns at all.
struct SeekLineParams {
  double half_length = 3.0;  // positions lie in [-L, L]
  double min_gap = 1.0;      // initial |target - agent|
  int t_max = 50;
};

class SeekLineEnv final : public TrainingEnv {
 public:
  SeekLineEnv(EpisodeConfig cfg, SeekLineParams p, std::uint64_t seed);
  const Observation& reset() override;
  const Observation& reset_to(double agent, double target);
  StepResult step(const Action& a) override;
  const Observation& observation() const override { return obs_; }
  bool done() const override { return done_; }
  double position() const { return x_; }
  double target() const { return goal_; }

 private:
  void refresh();

  EpisodeConfig cfg_;
  SeekLineParams p_;
  Rng rng_;
  double x_ = 0.0, goal_ = 0.0;
  int t_ = 0;
  bool done_ = true;
  Observation obs_;
};

// Deterministic-policy success rate over `episodes` seeded starts.
double evaluate_seek_line(Policy& policy, const EpisodeConfig& cfg, const SeekLineParams& p,
                          int episodes, std::uint64_t seed);

// Runs fn(i) for i in [0, n) over `workers` threads (static interleaving).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace egosearch
