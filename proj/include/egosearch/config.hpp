#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egosearch/env.hpp"
#include "egosearch/learner.hpp"
#include "egosearch/replan.hpp"
#include "egosearch/scene.hpp"

namespace egosearch {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalSettings {
  int scenarios = 100;
  int suite_size = 10;
  std::uint64_t suite_base = 1000;
  std::uint64_t scenario_seed = 77;
  std::vector<double> heights{1.65, 1.05, 0.45};
  std::vector<int> m_values{2, 5, 10};
  int one_step_short = 5;
  int one_step_long = 10;
};

struct RunConfig {
  SceneParams scene;
  EpisodeConfig episode;
  TrainConfig train;
  FullBodyConfig fullbody;
  MockCharacterParams mock;
  EvalSettings eval;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int workers = 1;
  std::string out = "out";

  // Desk-scale preset: 36x36 render, 32x32 crop, reduced networks and budget.
  static RunConfig toy();
};

nlohmann::json to_json(const EpisodeConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const RunConfig& c);

// Keys absent from `j` keep the value in `base`; unknown keys throw ConfigError.
EpisodeConfig episode_config_from_json(const nlohmann::json& j, EpisodeConfig base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
void save_run_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace egosearch
