#include "egosearch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace egosearch {

double spl(const std::vector<SplItem>& items) {
  if (items.empty()) throw std::invalid_argument("spl: empty result list");
  double sum = 0.0;
  for (const SplItem& it : items) {
    if (!(it.shortest > 0.0)) throw std::invalid_argument("spl: shortest path length must be positive");
    if (it.taken < 0.0) throw std::invalid_argument("spl: negative path length");
    if (it.success) sum += it.shortest / std::max(it.taken, it.shortest);
  }
  return sum / static_cast<double>(items.size());
}

std::vector<std::uint64_t> suite_seeds(std::uint64_t base, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
  return out;
}

std::shared_ptr<const Scene> SceneCache::get(std::uint64_t seed) {
  std::lock_guard lock(mu_);
  auto it = scenes_.find(seed);
  if (it != scenes_.end()) return it->second;
  auto scene = std::make_shared<const Scene>(generate_scene(seed, params_));
  scenes_.emplace(seed, scene);
  return scene;
}

void SceneCache::preload(const std::vector<std::uint64_t>& seeds) {
  for (std::uint64_t s : seeds) get(s);
}

ScenarioSet make_scenarios(const std::vector<std::uint64_t>& scene_seeds, int count, TargetMode mode,
                           const SceneParams& params, std::uint64_t seed) {
  if (scene_seeds.empty()) throw std::invalid_argument("scenarios: no scene seeds");
  ScenarioSet set;
  set.params = params;
  SceneCache cache(params);
  Rng rng(seed);
  EpisodeConfig cfg;
  cfg.agent_radius = params.agent_radius;
  for (int i = 0; i < count; ++i) {
    Scenario sc;
    sc.scene_seed = scene_seeds[static_cast<std::size_t>(i) % scene_seeds.size()];
    sc.mode = mode;
    Env env(cache.get(sc.scene_seed), cfg, params, rng.next_u64());
    env.reset(1.65, mode);
    sc.target = env.scene().target().position;
    sc.agent = {env.state().x, env.state().y, env.state().body_yaw};
    set.items.push_back(sc);
  }
  return set;
}

double reference_path_length(const Scene& scene, const Vec2& start, const Vec3& target,
                             double success_radius) {
  const Vec2 t = target.head<2>();
  const auto cell = nearest_free_cell(scene, t);
  if (!cell) throw SceneError("reference path: no free cell near the target");
  const Vec2 goal = scene.cell_center(cell->first, cell->second);
  const double slack = std::max(0.0, success_radius - (goal - t).norm());
  const double len = shortest_path_length(scene, start, goal) - slack;
  return std::max(len, scene.nav_resolution());
}

EvalReport summarize(std::string label, std::vector<ScenarioResult> rows) {
  EvalReport r;
  r.label = std::move(label);
  if (rows.empty()) return r;
  std::vector<SplItem> items;
  double succ = 0.0, att = 0.0, col = 0.0;
  for (const ScenarioResult& s : rows) {
    items.push_back({s.success, s.shortest, s.path_length});
    succ += s.success ? 1.0 : 0.0;
    att += s.attempts;
    col += s.collisions;
  }
  const double n = static_cast<double>(rows.size());
  r.success_rate = succ / n;
  r.spl = spl(items);
  r.mean_attempts = att / n;
  r.mean_collisions = col / n;
  r.rows = std::move(rows);
  return r;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mu;
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < n; i += w) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::uint64_t scenario_seed(std::uint64_t base, std::size_t i) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::uint64_t> seeds_of(const ScenarioSet& set) {
  std::vector<std::uint64_t> out;
  for (const Scenario& s : set.items) out.push_back(s.scene_seed);
  return out;
}

}  // namespace

EvalReport evaluate_policy(Policy& policy, const ScenarioSet& scenarios, SceneCache& scenes,
                           const EpisodeConfig& cfg_in, double height, const EvalOptions& opt) {
  EpisodeConfig cfg = cfg_in;
  cfg.randomize_height = false;
  cfg.height_noise = false;
  scenes.preload(seeds_of(scenarios));
  std::vector<ScenarioResult> rows(scenarios.size());
  parallel_for(scenarios.size(), opt.workers, [&](std::size_t i) {
    const Scenario& sc = scenarios.items[i];
    const std::uint64_t seed = scenario_seed(opt.seed, i);
    Env env(scenes.get(sc.scene_seed), cfg, scenarios.params, seed);
    env.reset_to(sc.target, sc.agent, height);
    Rng prng(seed ^ 0x5bd1e995ULL);
    ScenarioResult r;
    r.index = i;
    r.attempts = 1;
    const Vec2 start = env.state().position();
    Vec2 last = start;
    Termination term = Termination::None;
    while (!env.done()) {
      const StepResult s = env.step(policy.act(env.observation(), prng));
      r.path_length += (env.state().position() - last).norm();
      last = env.state().position();
      term = s.termination;
    }
    r.success = term == Termination::Success;
    r.steps = env.state().t;
    r.collisions = env.state().n_col;
    r.shortest = reference_path_length(env.scene(), start, sc.target, cfg.success_radius);
    rows[i] = r;
  });
  std::ostringstream label;
  label << "h=" << height;
  return summarize(label.str(), std::move(rows));
}

const HeightCell& HeightTable::at(double height, TargetMode mode) const {
  for (const HeightCell& c : cells) {
    if (std::abs(c.height - height) < 1e-9 && c.mode == mode) return c;
  }
  throw std::out_of_range("height table: no such cell");
}

HeightTable height_sweep(Policy& policy, const ScenarioSet& exclude_cabinets,
                         const ScenarioSet& everywhere, SceneCache& scenes, const EpisodeConfig& cfg,
                         const std::vector<double>& heights, const EvalOptions& opt) {
  HeightTable t;
  for (double h : heights) {
    for (TargetMode m : {TargetMode::ExcludeCabinets, TargetMode::Everywhere}) {
      const ScenarioSet& set = m == TargetMode::ExcludeCabinets ? exclude_cabinets : everywhere;
      const EvalReport r = evaluate_policy(policy, set, scenes, cfg, h, opt);
      t.cells.push_back({h, m, r.success_rate, r.spl});
    }
  }
  return t;
}

void write_height_table_csv(std::ostream& out, const HeightTable& t) {
  out << "height,mode,success_rate,spl\n";
  const auto old = out.precision(17);
  for (const HeightCell& c : t.cells) {
    out << c.height << ',' << to_string(c.mode) << ',' << c.success_rate << ',' << c.spl << '\n';
  }
  out.precision(old);
}

HeightTable read_height_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "height,mode,success_rate,spl") {
    throw std::runtime_error("height table: missing header");
  }
  HeightTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string h, m, s, p;
    if (!std::getline(ss, h, ',') || !std::getline(ss, m, ',') || !std::getline(ss, s, ',') ||
        !std::getline(ss, p)) {
      throw std::runtime_error("height table: bad row '" + line + "'");
    }
    t.cells.push_back({std::stod(h), target_mode_from_string(m), std::stod(s), std::stod(p)});
  }
  return t;
}

void write_height_table_text(std::ostream& out, const HeightTable& t) {
  std::vector<double> heights;
  for (const HeightCell& c : t.cells) {
    if (std::find(heights.begin(), heights.end(), c.height) == heights.end()) heights.push_back(c.height);
  }
  out << std::left << std::setw(10) << "Height" << std::setw(22) << "Excluding cabinets"
      << "Everywhere\n";
  for (double h : heights) {
    std::ostringstream a, b, hs;
    hs << std::fixed << std::setprecision(2) << h << "m";
    a << std::fixed << std::setprecision(0) << 100.0 * t.at(h, TargetMode::ExcludeCabinets).success_rate
      << "%";
    b << std::fixed << std::setprecision(0) << 100.0 * t.at(h, TargetMode::Everywhere).success_rate << "%";
    out << std::setw(10) << hs.str() << std::setw(22) << a.str() << b.str() << '\n';
  }
}

std::vector<AblationRun> ablate_head(const TrainEnvSpec& spec, const TrainConfig& tc,
                                     const std::vector<std::uint64_t>& seeds,
                                     const ScenarioSet& curve_scenarios,
                                     const ScenarioSet& final_scenarios, SceneCache& scenes,
                                     double eval_height, const EvalOptions& opt, std::ostream* log) {
  std::vector<AblationRun> runs;
  for (std::uint64_t seed : seeds) {
    for (bool head : {true, false}) {
      TrainEnvSpec s = spec;
      s.episode.head_enabled = head;
      if (log != nullptr) *log << "training seed " << seed << (head ? " head" : " no-head") << std::endl;
      const Evaluator evaluator = [&](Policy& p) {
        return evaluate_policy(p, curve_scenarios, scenes, s.episode, eval_height, opt).success_rate;
      };
      TrainResult tr = train(s, tc, seed, evaluator, log);
      AblationRun run;
      run.seed = seed;
      run.head = head;
      run.curve = std::move(tr.curve);
      run.final_eval = evaluate_policy(*tr.agent, final_scenarios, scenes, s.episode, eval_height, opt);
      run.final_eval.label = std::string(head ? "head" : "no-head") + " seed=" + std::to_string(seed);
      run.agent = std::move(tr.agent);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

std::vector<BaselineConfig> default_baselines(const std::vector<int>& m_values, int horizon,
                                              int one_step_short, int one_step_long) {
  std::vector<BaselineConfig> out;
  for (int m : m_values) {
    out.push_back({"ours(M=" + std::to_string(m) + ")", BaselineConfig::Kind::Ours, m, horizon});
  }
  out.push_back({"1-step(short=" + std::to_string(one_step_short) + ")", BaselineConfig::Kind::OneStep,
                 one_step_short, one_step_short});
  out.push_back({"1-step(long=" + std::to_string(one_step_long) + ")", BaselineConfig::Kind::OneStep,
                 one_step_long, one_step_long});
  out.push_back({"noisy-search", BaselineConfig::Kind::NoisySearch, 1, 1});
  return out;
}

BaselineReport compare_baselines(Policy& policy, const MockCharacterParams& mock,
                                 const ScenarioSet& scenarios, SceneCache& scenes,
                                 const EpisodeConfig& cfg_in, const FullBodyConfig& fb_in,
                                 const std::vector<BaselineConfig>& configs, const EvalOptions& opt) {
  EpisodeConfig cfg = cfg_in;
  cfg.randomize_height = false;
  cfg.height_noise = false;
  scenes.preload(seeds_of(scenarios));
  BaselineReport report;
  for (const BaselineConfig& bc : configs) {
    std::vector<ScenarioResult> rows(scenarios.size());
    parallel_for(scenarios.size(), opt.workers, [&](std::size_t i) {
      const Scenario& sc = scenarios.items[i];
      const Scene scene = scenes.get(sc.scene_seed)->with_target(
          TargetObject{sc.target, scenes.get(sc.scene_seed)->target().radius});
      AbstractState s0;
      s0.x = sc.agent.x;
      s0.y = sc.agent.y;
      s0.body_yaw = sc.agent.yaw;
      s0.base_height = mock.base_height;
      MockCharacter mg(mock);
      // Same stream per scenario across configurations (matched comparison).
      Rng rng(scenario_seed(opt.seed, i));
      FullBodyConfig fb = fb_in;
      FullBodyEpisode ep;
      switch (bc.kind) {
        case BaselineConfig::Kind::Ours:
          fb.execute = bc.execute;
          fb.horizon = bc.horizon;
          ep = run_episode_fullbody(policy, mg, scene, s0, cfg, fb, rng);
          break;
        case BaselineConfig::Kind::OneStep:
          ep = one_step_controller(policy, mg, scene, s0, cfg, fb, bc.horizon, rng);
          break;
        case BaselineConfig::Kind::NoisySearch:
          ep = noisy_search_controller(policy, mg, scene, s0, cfg, fb, rng);
          break;
      }
      ScenarioResult r;
      r.index = i;
      r.success = ep.metrics.success;
      r.steps = ep.metrics.steps;
      r.path_length = ep.metrics.path_length;
      r.attempts = ep.metrics.attempts;
      r.collisions = ep.metrics.penetrations;
      r.shortest = reference_path_length(scene, s0.position(), sc.target, cfg.success_radius);
      rows[i] = r;
    });
    report.configs.push_back(summarize(bc.name, std::move(rows)));
  }
  return report;
}

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "config,scenario,success,steps,path_length,shortest,attempts,collisions\n";
  const auto old = out.precision(17);
  for (const EvalReport& r : reports) {
    for (const ScenarioResult& s : r.rows) {
      out << r.label << ',' << s.index << ',' << (s.success ? 1 : 0) << ',' << s.steps << ','
          << s.path_length << ',' << s.shortest << ',' << s.attempts << ',' << s.collisions << '\n';
    }
  }
  out.precision(old);
}

void write_summary_text(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << std::left << std::setw(24) << "config" << std::setw(10) << "success" << std::setw(10)
      << "SPL" << std::setw(12) << "attempts" << "collisions\n";
  for (const EvalReport& r : reports) {
    std::ostringstream a, b, c, d;
    a << std::fixed << std::setprecision(3) << r.success_rate;
    b << std::fixed << std::setprecision(3) << r.spl;
    c << std::fixed << std::setprecision(2) << r.mean_attempts;
    d << std::fixed << std::setprecision(2) << r.mean_collisions;
    out << std::setw(24) << r.label << std::setw(10) << a.str() << std::setw(10) << b.str()
        << std::setw(12) << c.str() << d.str() << '\n';
  }
}

SeekLineEnv::SeekLineEnv(EpisodeConfig cfg, SeekLineParams p, std::uint64_t seed)
    : cfg_(std::move(cfg)), p_(p), rng_(seed) {
  if (p_.half_length <= 0.0 || p_.min_gap < 0.0 || p_.min_gap >= 2.0 * p_.half_length || p_.t_max < 1) {
    throw std::invalid_argument("seek line: bad parameters");
  }
}

const Observation& SeekLineEnv::reset() {
  const double l = p_.half_length;
  double a = 0.0, g = 0.0;
  do {
    a = rng_.uniform(-l, l);
    g = rng_.uniform(-l, l);
  } while (std::abs(g - a) < p_.min_gap);
  return reset_to(a, g);
}

const Observation& SeekLineEnv::reset_to(double agent, double target) {
  x_ = agent;
  goal_ = target;
  t_ = 0;
  done_ = false;
  obs_.depth.assign(static_cast<std::size_t>(cfg_.stack), DepthImage(cfg_.render_width, cfg_.render_height, 1.0));
  refresh();
  return obs_;
}

void SeekLineEnv::refresh() {
  MaskFeature f;
  f.visible = true;
  f.x_c = (goal_ - x_) / (2.0 * p_.half_length);
  f.r = std::abs(f.x_c);
  f.alpha = std::atan2(0.0, f.x_c);
  obs_.mask = f;
}

StepResult SeekLineEnv::step(const Action& a) {
  if (done_) throw std::logic_error("seek line: step after episode end");
  const double dx = std::clamp(a.dx, -cfg_.action_bounds.translate, cfg_.action_bounds.translate);
  x_ = std::clamp(x_ + dx, -p_.half_length, p_.half_length);
  ++t_;
  refresh();
  const double gap = std::abs(goal_ - x_);
  const bool success = gap <= cfg_.success_radius;
  StepResult r;
  RewardTerms& w = r.reward;
  w.success = success ? cfg_.success_reward : 0.0;
  w.distance = -gap;
  w.live = cfg_.live_penalty;
  w.terminal = success ? cfg_.terminal_bonus : 0.0;
  const auto terms = w.as_array();
  for (std::size_t i = 0; i < terms.size(); ++i) w.total += cfg_.weights[i] * terms[i];
  r.termination = success ? Termination::Success : (t_ >= p_.t_max ? Termination::Timeout : Termination::None);
  done_ = r.termination != Termination::None;
  return r;
}

double evaluate_seek_line(Policy& policy, const EpisodeConfig& cfg, const SeekLineParams& p,
                          int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("seek line: need at least one episode");
  SeekLineEnv env(cfg, p, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  int wins = 0;
  for (int e = 0; e < episodes; ++e) {
    env.reset();
    StepResult r;
    while (!env.done()) r = env.step(policy.act(env.observation(), rng));
    wins += r.termination == Termination::Success ? 1 : 0;
  }
  return static_cast<double>(wins) / episodes;
}

}  // namespace egosearch
