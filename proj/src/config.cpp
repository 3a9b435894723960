#include "egosearch/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "egosearch/scene_io.hpp"

namespace egosearch {

using nlohmann::json;

namespace {

// Field codecs. Each config struct lists its fields once in a `visit`
// function; the writer and reader walk the same list.

// Infinity has no JSON literal; it is spelled "inf".
void put(json& j, double v) {
  if (std::isinf(v)) {
    j = v > 0 ? "inf" : "-inf";
  } else {
    j = v;
  }
}
void put(json& j, int v) { j = v; }
void put(json& j, long v) { j = v; }
void put(json& j, bool v) { j = v; }
void put(json& j, std::uint64_t v) { j = v; }
void put(json& j, TargetMode v) { j = to_string(v); }
void put(json& j, const std::optional<double>& v) { j = v ? json(*v) : json(nullptr); }
template <typename T>
void put(json& j, const std::vector<T>& v) { j = v; }
template <std::size_t N>
void put(json& j, const std::array<double, N>& v) { j = v; }
void put(json& j, const nn::AdamConfig& a) {
  j = {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

void get(const json& j, double& v) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s != "inf" && s != "-inf") throw ConfigError("expected a number, got '" + s + "'");
    v = (s == "inf" ? 1.0 : -1.0) * std::numeric_limits<double>::infinity();
  } else {
    v = j.get<double>();
  }
}
void get(const json& j, int& v) { v = j.get<int>(); }
void get(const json& j, long& v) { v = j.get<long>(); }
void get(const json& j, bool& v) { v = j.get<bool>(); }
void get(const json& j, std::uint64_t& v) { v = j.get<std::uint64_t>(); }
void get(const json& j, TargetMode& v) { v = target_mode_from_string(j.get<std::string>()); }
void get(const json& j, std::optional<double>& v) {
  if (j.is_null()) {
    v.reset();
  } else {
    v = j.get<double>();
  }
}
template <typename T>
void get(const json& j, std::vector<T>& v) { v = j.get<std::vector<T>>(); }
template <std::size_t N>
void get(const json& j, std::array<double, N>& v) {
  if (!j.is_array() || j.size() != N) throw ConfigError("expected an array of " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) v[i] = j[i].get<double>();
}
void get(const json& j, nn::AdamConfig& a) {
  for (const auto& [k, val] : j.items()) {
    if (k == "lr") a.lr = val.get<double>();
    else if (k == "beta1") a.beta1 = val.get<double>();
    else if (k == "beta2") a.beta2 = val.get<double>();
    else if (k == "eps") a.eps = val.get<double>();
    else throw ConfigError("unknown optimizer key '" + k + "'");
  }
}

struct Writer {
  json& j;
  template <typename T>
  void operator()(const char* key, const T& v) { put(j[key], v); }
};

struct Reader {
  const json& j;
  std::string where;
  std::size_t used = 0;
  template <typename T>
  void operator()(const char* key, T& v) {
    if (!j.contains(key)) return;
    ++used;
    try {
      get(j.at(key), v);
    } catch (const json::exception& e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    }
  }
};

template <typename T, typename Visit>
json write(const T& c, Visit visit) {
  json j = json::object();
  Writer w{j};
  visit(w, const_cast<T&>(c));
  return j;
}

template <typename T, typename Visit>
T read(const json& j, T base, Visit visit, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  // Unknown-key check against the written form of the defaults.
  const json known = write(base, visit);
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
  Reader r{j, where};
  visit(r, base);
  return base;
}

template <typename V>
void visit_episode(V& v, EpisodeConfig& c) {
  v("t_max", c.t_max);
  v("success_radius", c.success_radius);
  v("weights", c.weights);
  v("success_reward", c.success_reward);
  v("terminal_bonus", c.terminal_bonus);
  v("live_penalty", c.live_penalty);
  v("collision_step", c.collision_step);
  v("collision_floor", c.collision_floor);
  v("stack", c.stack);
  v("randomize_height", c.randomize_height);
  v("height_min", c.height_min);
  v("height_max", c.height_max);
  v("height_noise", c.height_noise);
  v("height_noise_range", c.height_noise_range);
  v("max_translate", c.action_bounds.translate);
  v("max_rotate", c.action_bounds.rotate);
  v("max_camera", c.action_bounds.camera);
  v("pitch_limit", c.joint_limits.pitch);
  v("yaw_limit", c.joint_limits.yaw);
  v("head_enabled", c.head_enabled);
  v("render_width", c.render_width);
  v("render_height", c.render_height);
  v("crop_width", c.crop_width);
  v("crop_height", c.crop_height);
  v("agent_radius", c.agent_radius);
  v("contact_epsilon", c.contact_epsilon);
  v("target_mode", c.target_mode);
}

template <typename V>
void visit_train(V& v, TrainConfig& c) {
  v("gamma", c.gamma);
  v("batch", c.batch);
  v("total_steps", c.total_steps);
  v("replay_capacity", c.replay_capacity);
  v("warmup", c.warmup);
  v("update_every", c.update_every);
  v("actor_update_every", c.actor_update_every);
  v("actor_opt", c.actor_opt);
  v("critic_opt", c.critic_opt);
  v("encoder_opt", c.encoder_opt);
  v("alpha_opt", c.alpha_opt);
  v("init_temperature", c.init_temperature);
  v("critic_tau", c.critic_tau);
  v("encoder_tau", c.encoder_tau);
  v("curl_weight", c.curl_weight);
  v("head_history", c.head_history);
  v("target_entropy", c.target_entropy);
  v("conv_layers", c.conv_layers);
  v("filters", c.filters);
  v("latent", c.latent);
  v("hidden", c.hidden);
  v("hidden_layers", c.hidden_layers);
  v("eval_every", c.eval_every);
  v("eval_episodes", c.eval_episodes);
}

template <typename V>
void visit_fullbody(V& v, FullBodyConfig& c) {
  v("horizon", c.horizon);
  v("execute", c.execute);
  v("step_budget", c.step_budget);
  v("body_radius", c.body_radius);
  v("body_height", c.body_height);
}

template <typename V>
void visit_mock(V& v, MockCharacterParams& c) {
  v("lag", c.lag);
  v("bob_amplitude", c.bob_amplitude);
  v("bob_frequency", c.bob_frequency);
  v("max_speed", c.max_speed);
  v("base_height", c.base_height);
}

template <typename V>
void visit_eval(V& v, EvalSettings& c) {
  v("scenarios", c.scenarios);
  v("suite_size", c.suite_size);
  v("suite_base", c.suite_base);
  v("scenario_seed", c.scenario_seed);
  v("heights", c.heights);
  v("m_values", c.m_values);
  v("one_step_short", c.one_step_short);
  v("one_step_long", c.one_step_long);
}

void validate(const EpisodeConfig& c) {
  if (c.t_max < 1) throw ConfigError("episode.t_max must be positive");
  if (c.stack < 1) throw ConfigError("episode.stack must be positive");
  if (c.crop_width > c.render_width || c.crop_height > c.render_height) {
    throw ConfigError("episode crop must not exceed the render size");
  }
  if (c.height_min > c.height_max) throw ConfigError("episode.height_min > height_max");
}

void validate(const TrainConfig& c) {
  if (c.batch < 2) throw ConfigError("train.batch must be at least 2");
  if (c.total_steps < 1 || c.replay_capacity < 1) throw ConfigError("train budget must be positive");
  if (c.update_every < 1 || c.actor_update_every < 1) throw ConfigError("train update periods must be positive");
  if (c.head_history != 1) throw ConfigError("train.head_history other than 1 is not supported");
  if (c.eval_every < 1) throw ConfigError("train.eval_every must be positive");
}

}  // namespace

json to_json(const EpisodeConfig& c) { return write(c, [](auto& v, auto& x) { visit_episode(v, x); }); }
json to_json(const TrainConfig& c) { return write(c, [](auto& v, auto& x) { visit_train(v, x); }); }

json to_json(const RunConfig& c) {
  json j;
  j["version"] = kConfigVersion;
  j["scene"] = scene_params_to_json(c.scene);
  j["episode"] = to_json(c.episode);
  j["train"] = to_json(c.train);
  j["fullbody"] = write(c.fullbody, [](auto& v, auto& x) { visit_fullbody(v, x); });
  j["mock"] = write(c.mock, [](auto& v, auto& x) { visit_mock(v, x); });
  j["eval"] = write(c.eval, [](auto& v, auto& x) { visit_eval(v, x); });
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["workers"] = c.workers;
  j["out"] = c.out;
  return j;
}

EpisodeConfig episode_config_from_json(const json& j, EpisodeConfig base) {
  auto c = read(j, base, [](auto& v, auto& x) { visit_episode(v, x); }, "episode");
  validate(c);
  return c;
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  auto c = read(j, base, [](auto& v, auto& x) { visit_train(v, x); }, "train");
  validate(c);
  return c;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  static const std::set<std::string> known{"version", "scene", "episode", "train", "fullbody", "mock",
                                           "eval", "seed", "deterministic", "workers", "out"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "' in config");
  }
  if (!j.contains("version")) throw ConfigError("config is missing 'version'");
  if (j["version"] != kConfigVersion) throw ConfigError("unsupported config version");
  try {
    if (j.contains("scene")) c.scene = scene_params_from_json(j["scene"], c.scene);
  } catch (const SceneError& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("episode")) c.episode = episode_config_from_json(j["episode"], c.episode);
  if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
  if (j.contains("fullbody")) {
    c.fullbody = read(j["fullbody"], c.fullbody, [](auto& v, auto& x) { visit_fullbody(v, x); }, "fullbody");
  }
  if (j.contains("mock")) {
    c.mock = read(j["mock"], c.mock, [](auto& v, auto& x) { visit_mock(v, x); }, "mock");
  }
  if (j.contains("eval")) {
    c.eval = read(j["eval"], c.eval, [](auto& v, auto& x) { visit_eval(v, x); }, "eval");
  }
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("deterministic")) c.deterministic = j["deterministic"].get<bool>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.workers < 1) throw ConfigError("workers must be positive");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, base);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << to_json(c).dump(2) << '\n';
}

RunConfig RunConfig::toy() {
  RunConfig c;
  c.episode.render_width = c.episode.render_height = 36;
  c.episode.crop_width = c.episode.crop_height = 32;
  c.train = TrainConfig::toy();
  return c;
}

}  // namespace egosearch
