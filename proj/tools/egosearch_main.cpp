// egosearch command-line entry point.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "egosearch/checkpoint.hpp"
#include "egosearch/config.hpp"
#include "egosearch/eval.hpp"
#include "egosearch/gradcheck.hpp"
#include "egosearch/image_io.hpp"
#include "egosearch/learner.hpp"
#include "egosearch/replan.hpp"
#include "egosearch/scene_io.hpp"

namespace fs = std::filesystem;
using namespace egosearch;

namespace {

struct Globals {
  std::string config;
  std::string preset = "full";
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out;
  int workers = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

// Preset, then config file, then flags.
RunConfig resolve(const Globals& g) {
  RunConfig c = g.preset == "toy" ? RunConfig::toy() : RunConfig{};
  if (!g.config.empty()) c = load_run_config(g.config, c);
  if (g.seed_opt->count() > 0) c.seed = g.seed;
  if (g.out_opt->count() > 0) c.out = g.out;
  if (g.workers_opt->count() > 0) c.workers = g.workers;
  if (g.deterministic) c.deterministic = true;
  if (c.workers < 1) throw ConfigError("--workers must be positive");
  if (c.deterministic) c.workers = 1;
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out(c.out);
  fs::create_directories(out);
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

std::vector<TargetMode> parse_modes(const std::string& s) {
  if (s == "both") return {TargetMode::ExcludeCabinets, TargetMode::Everywhere};
  return {target_mode_from_string(s)};
}

// Policy selected on the command line; owns the checkpoint when there is one.
struct LoadedPolicy {
  std::unique_ptr<SacAgent> agent;
  std::unique_ptr<Policy> other;
  EpisodeConfig episode;
  Policy& get() { return agent ? static_cast<Policy&>(*agent) : *other; }
};

LoadedPolicy load_policy(const std::string& kind, const std::string& checkpoint, const RunConfig& c) {
  LoadedPolicy p;
  p.episode = c.episode;
  if (kind == "checkpoint") {
    if (checkpoint.empty()) throw std::runtime_error("a trained policy is required: pass --checkpoint PATH");
    p.agent = load_checkpoint(checkpoint);
    // Render and head settings follow the checkpoint.
    const EpisodeConfig& ec = p.agent->episode_config();
    p.episode.render_width = ec.render_width;
    p.episode.render_height = ec.render_height;
    p.episode.crop_width = ec.crop_width;
    p.episode.crop_height = ec.crop_height;
    p.episode.stack = ec.stack;
    p.episode.head_enabled = ec.head_enabled;
  } else if (kind == "scripted") {
    p.other = std::make_unique<ScriptedSeeker>(c.episode);
  } else if (kind == "zero") {
    p.other = std::make_unique<ZeroPolicy>();
  } else {
    throw std::runtime_error("unknown policy '" + kind + "'");
  }
  return p;
}

ScenarioSet scenarios_for(const RunConfig& c, int count, TargetMode mode, std::uint64_t salt) {
  return make_scenarios(suite_seeds(c.eval.suite_base, c.eval.suite_size), count, mode, c.scene,
                        c.eval.scenario_seed + salt);
}

int cmd_gen_scene(const RunConfig& c, std::uint64_t scene_seed, const std::string& file) {
  const Scene scene = generate_scene(scene_seed, c.scene);
  fs::path path = file.empty() ? prepare_out(c) / ("scene_" + std::to_string(scene_seed) + ".json")
                               : fs::path(file);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_scene(path, scene);
  std::cout << "wrote " << path.string() << " (" << scene.furniture().size() << " furniture, "
            << scene.cabinets().size() << " cabinets, " << scene.free_cell_count() << " free cells)\n";
  return 0;
}

TrainEnvSpec train_spec(const RunConfig& c, SceneCache& cache) {
  TrainEnvSpec spec;
  for (std::uint64_t s : suite_seeds(c.eval.suite_base, c.eval.suite_size)) spec.scenes.push_back(cache.get(s));
  spec.params = c.scene;
  spec.episode = c.episode;
  return spec;
}

int cmd_train(RunConfig c, bool no_head, int ablate_seeds) {
  const fs::path out = prepare_out(c);
  if (no_head) c.episode.head_enabled = false;
  save_run_config(out / "run_config.json", c);
  SceneCache cache(c.scene);
  const TrainEnvSpec spec = train_spec(c, cache);
  const EvalOptions opt{c.workers, c.seed};
  const ScenarioSet curve_set = scenarios_for(c, c.train.eval_episodes, c.episode.target_mode, 1);

  if (ablate_seeds > 0) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < ablate_seeds; ++i) seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
    const ScenarioSet final_set = scenarios_for(c, c.eval.scenarios, c.episode.target_mode, 2);
    const auto runs = ablate_head(spec, c.train, seeds, curve_set, final_set, cache, 1.65, opt, &std::cout);
    std::vector<EvalReport> finals;
    for (const auto& r : runs) {
      const std::string tag = std::string(r.head ? "head" : "nohead") + "_s" + std::to_string(r.seed);
      auto f = open_out(out / ("curve_" + tag + ".csv"));
      write_curve_csv(f, r.curve);
      save_checkpoint(out / ("checkpoint_" + tag + ".bin"), *r.agent);
      finals.push_back(r.final_eval);
    }
    auto f = open_out(out / "ablation.txt");
    write_summary_text(f, finals);
    write_summary_text(std::cout, finals);
    return 0;
  }

  const Evaluator evaluator = [&](Policy& p) {
    return evaluate_policy(p, curve_set, cache, c.episode, 1.65, opt).success_rate;
  };
  TrainResult tr = train(spec, c.train, c.seed, evaluator, &std::cout);
  save_checkpoint(out / "checkpoint.bin", *tr.agent);
  auto f = open_out(out / "curve.csv");
  write_curve_csv(f, tr.curve);
  std::cout << "wrote " << (out / "checkpoint.bin").string() << " after " << tr.episodes << " episodes\n";
  return 0;
}

int cmd_eval(const RunConfig& c, const std::string& policy_kind, const std::string& checkpoint,
             std::vector<double> heights, const std::string& mode, int count) {
  LoadedPolicy lp = load_policy(policy_kind, checkpoint, c);
  const fs::path out = prepare_out(c);
  if (heights.empty()) heights = c.eval.heights;
  if (count <= 0) count = c.eval.scenarios;
  SceneCache cache(c.scene);
  const EvalOptions opt{c.workers, c.seed};
  std::vector<EvalReport> reports;
  HeightTable table;
  for (TargetMode m : parse_modes(mode)) {
    const ScenarioSet set = scenarios_for(c, count, m, m == TargetMode::ExcludeCabinets ? 10 : 20);
    for (double h : heights) {
      EvalReport r = evaluate_policy(lp.get(), set, cache, lp.episode, h, opt);
      std::ostringstream label;
      label << "h=" << h << " " << to_string(m);
      r.label = label.str();
      table.cells.push_back({h, m, r.success_rate, r.spl});
      reports.push_back(std::move(r));
    }
  }
  {
    auto f = open_out(out / "eval_rows.csv");
    write_report_csv(f, reports);
  }
  {
    auto f = open_out(out / "height_table.csv");
    write_height_table_csv(f, table);
  }
  if (mode == "both") {
    auto f = open_out(out / "height_table.txt");
    write_height_table_text(f, table);
    write_height_table_text(std::cout, table);
  } else {
    write_summary_text(std::cout, reports);
  }
  return 0;
}

int cmd_replan(RunConfig c, const std::string& policy_kind, const std::string& checkpoint,
               const std::vector<int>& m_values, int horizon, const std::string& mode, int count,
               bool baselines, int export_count) {
  LoadedPolicy lp = load_policy(policy_kind, checkpoint, c);
  const fs::path out = prepare_out(c);
  if (horizon > 0) c.fullbody.horizon = horizon;
  if (count <= 0) count = c.eval.scenarios;
  const std::vector<int> ms = m_values.empty() ? c.eval.m_values : m_values;
  EpisodeConfig ec = lp.episode;
  ec.randomize_height = false;
  ec.height_noise = false;
  SceneCache cache(c.scene);
  const ScenarioSet set = scenarios_for(c, count, target_mode_from_string(mode), 30);
  const EvalOptions opt{c.workers, c.seed};

  std::vector<BaselineConfig> configs;
  if (baselines) {
    configs = default_baselines(ms, c.fullbody.horizon, c.eval.one_step_short, c.eval.one_step_long);
  } else {
    for (int m : ms) configs.push_back({"ours(M=" + std::to_string(m) + ")", BaselineConfig::Kind::Ours, m, c.fullbody.horizon});
  }
  const BaselineReport rep = compare_baselines(lp.get(), c.mock, set, cache, ec, c.fullbody, configs, opt);
  {
    auto f = open_out(out / "replan_rows.csv");
    write_report_csv(f, rep.configs);
  }
  {
    auto f = open_out(out / "replan_summary.txt");
    write_summary_text(f, rep.configs);
  }
  write_summary_text(std::cout, rep.configs);

  // Trajectories of the first scenarios under ours(M = first value).
  FullBodyConfig fb = c.fullbody;
  fb.execute = ms.front();
  for (int i = 0; i < std::min<int>(export_count, static_cast<int>(set.size())); ++i) {
    const Scenario& sc = set.items[i];
    const auto base = cache.get(sc.scene_seed);
    const Scene scene = base->with_target(TargetObject{sc.target, base->target().radius});
    AbstractState s0;
    s0.x = sc.agent.x;
    s0.y = sc.agent.y;
    s0.body_yaw = sc.agent.yaw;
    s0.base_height = c.mock.base_height;
    MockCharacter mg(c.mock);
    Rng rng(c.seed ^ (0x5bd1e995ULL * static_cast<std::uint64_t>(i + 1)));
    const FullBodyEpisode ep = run_episode_fullbody(lp.get(), mg, scene, s0, ec, fb, rng);
    char name[64];
    std::snprintf(name, sizeof(name), "trajectory_%03d", i);
    {
      auto f = open_out(out / (std::string(name) + ".csv"));
      write_trajectory_csv(f, ep.frames);
    }
    nlohmann::json side;
    side["scene"] = scene_to_json(scene);
    side["episode"] = to_json(ec);
    auto f = open_out(out / (std::string(name) + ".json"));
    f << side.dump(2) << '\n';
  }
  return 0;
}

int cmd_replay(const RunConfig& c, const std::string& trajectory, std::string sidecar, std::string frames_dir) {
  std::ifstream in(trajectory);
  if (!in) throw std::runtime_error("cannot read trajectory " + trajectory);
  const std::vector<FrameRecord> frames = read_trajectory_csv(in);
  if (sidecar.empty()) sidecar = fs::path(trajectory).replace_extension(".json").string();
  std::ifstream sin(sidecar);
  if (!sin) throw std::runtime_error("cannot read trajectory scene " + sidecar);
  const nlohmann::json side = nlohmann::json::parse(sin);
  const Scene scene = scene_from_json(side.at("scene"));
  const EpisodeConfig ec = episode_config_from_json(side.at("episode"));
  const fs::path dir = frames_dir.empty() ? prepare_out(c) / "frames" : fs::path(frames_dir);
  fs::create_directories(dir);

  auto features = open_out(dir / "features.csv");
  features << "frame," << mask_feature_csv_header() << '\n';
  int mismatches = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame f = render_frame(scene, camera_pose(frames[i].state), ec.render_width, ec.render_height);
    if (depth_digest(f.depth) != frames[i].depth_digest) ++mismatches;
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu", i);
    write_pgm(dir / ("depth_" + std::string(name) + ".pgm"), f.depth);
    write_pgm(dir / ("mask_" + std::string(name) + ".pgm"), f.mask);
    features << i << ',' << mask_feature_csv_row(mask_features(f.mask)) << '\n';
  }
  std::cout << "rendered " << frames.size() << " frames to " << dir.string() << ", " << mismatches
            << " digest mismatches\n";
  if (mismatches > 0) {
    std::cerr << "egosearch: replay does not match the recorded depth digests\n";
    return 3;
  }
  return 0;
}

int cmd_gradcheck(int trials, std::uint64_t seed, double tolerance) {
  const GradCheckReport r = run_gradcheck(trials, seed);
  print_gradcheck(std::cout, r);
  if (r.max_rel_error() > tolerance) {
    std::cerr << "egosearch: gradient check failed (tolerance " << tolerance << ")\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egosearch: egocentric object search with an abstract agent"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--preset", g.preset, "Base configuration before --config")
      ->check(CLI::IsMember({"full", "toy"}));
  g.seed_opt = app.add_option("--seed", g.seed, "Global seed");
  app.add_flag("--deterministic", g.deterministic, "Bit-reproducible run (forces one worker)");
  g.out_opt = app.add_option("--out", g.out, "Output directory");
  g.workers_opt = app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-scene", "Generate a scene file");
  std::uint64_t scene_seed = 0;
  std::string scene_file;
  auto* scene_seed_opt = gen->add_option("--scene-seed", scene_seed, "Scene seed (default: --seed)");
  gen->add_option("--file", scene_file, "Output path");

  auto* tr = app.add_subcommand("train", "Train the abstract search policy");
  bool no_head = false;
  int ablate = 0;
  long steps = 0;
  tr->add_flag("--no-head", no_head, "Disable camera joint actions");
  tr->add_option("--ablate-seeds", ablate, "Train head and no-head agents on this many seeds");
  tr->add_option("--steps", steps, "Environment steps")->check(CLI::PositiveNumber);

  std::string policy_kind = "checkpoint", checkpoint, mode = "both";
  int count = 0;
  auto* ev = app.add_subcommand("eval", "Success rate and SPL over camera heights");
  std::vector<double> heights;
  ev->add_option("--checkpoint", checkpoint, "Trained policy");
  ev->add_option("--policy", policy_kind, "checkpoint | scripted | zero");
  ev->add_option("--heights", heights, "Camera heights (m)");
  ev->add_option("--mode", mode, "exclude_cabinets | everywhere | both");
  ev->add_option("--scenarios", count, "Scenario count");

  auto* rp = app.add_subcommand("replan", "Full-body episodes with the mock character and baselines");
  std::vector<int> m_values;
  int horizon = 0, export_count = 1;
  bool no_baselines = false;
  std::string replan_mode = "everywhere";
  double lag = -1.0, bob = -1.0;
  rp->add_option("--checkpoint", checkpoint, "Trained policy");
  rp->add_option("--policy", policy_kind, "checkpoint | scripted | zero");
  rp->add_option("--M", m_values, "Executed steps per plan (sweep)");
  rp->add_option("--T", horizon, "Plan horizon")->check(CLI::PositiveNumber);
  rp->add_option("--mode", replan_mode, "exclude_cabinets | everywhere");
  rp->add_option("--scenarios", count, "Scenario count");
  rp->add_option("--lag", lag, "Mock character tracking lag in (0, 1]");
  rp->add_option("--bob", bob, "Mock character head bob amplitude (m)");
  rp->add_flag("--no-baselines", no_baselines, "Only run ours for each M");
  rp->add_option("--export", export_count, "Trajectories to export");

  auto* rpl = app.add_subcommand("replay", "Re-render an exported trajectory to images");
  std::string trajectory, sidecar, frames_dir;
  rpl->add_option("trajectory", trajectory, "Trajectory file")->required()->check(CLI::ExistingFile);
  rpl->add_option("--scene", sidecar, "Trajectory scene file (default: alongside)");
  rpl->add_option("--frames", frames_dir, "Image directory (default: OUT/frames)");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the learner");
  int trials = 50;
  double tolerance = 1e-4;
  gc->add_option("--trials", trials, "Random trials")->check(CLI::PositiveNumber);
  gc->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig c = resolve(g);
    if (*gen) return cmd_gen_scene(c, scene_seed_opt->count() > 0 ? scene_seed : c.seed, scene_file);
    if (*tr) {
      if (steps > 0) c.train.total_steps = steps;
      return cmd_train(c, no_head, ablate);
    }
    if (*ev) return cmd_eval(c, policy_kind, checkpoint, heights, mode, count);
    if (*rp) {
      if (lag >= 0.0) c.mock.lag = lag;
      if (bob >= 0.0) c.mock.bob_amplitude = bob;
      if (c.mock.lag <= 0.0 || c.mock.lag > 1.0) throw ConfigError("--lag must be in (0, 1]");
      return cmd_replan(c, policy_kind, checkpoint, m_values, horizon, replan_mode, count, !no_baselines,
                        export_count);
    }
    if (*rpl) return cmd_replay(c, trajectory, sidecar, frames_dir);
    if (*gc) return cmd_gradcheck(trials, c.seed, tolerance);
  } catch (const std::exception& e) {
    std::cerr << "egosearch: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
