#pragma once

#include <filesystem>

#include <json.hpp>

#include "egosearch/scene.hpp"

namespace egosearch {

inline constexpr int kSceneFormatVersion = 1;

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

void save_scene(const std::filesystem::path& path, const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

nlohmann::json scene_params_to_json(const SceneParams& p);
// Missing keys keep their defaults; unknown keys are rejected.
SceneParams scene_params_from_json(const nlohmann::json& j, SceneParams base = {});

}  // namespace egosearch
