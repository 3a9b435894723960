#include "egosearch/policy.hpp"

#include <algorithm>
#include <cmath>

namespace egosearch {

double forward_clearance(const Observation& obs, double max_depth) {
  const DepthImage& d = obs.depth.back();
  const int w = d.width, h = d.height;
  // Row whose central ray is horizontal, given the camera pitch (90 degree FOV).
  const double v = std::tan(-obs.q_pitch);
  const int horizon = static_cast<int>(std::lround((h - 1 - v * w) / 2.0));
  const int row_lo = std::clamp(horizon, 0, h - 1);
  const int row_hi = std::clamp(horizon + std::max(1, h / 6), 0, h - 1);
  const int col_lo = w / 3, col_hi = w - 1 - w / 3;
  double nearest = 1.0;
  for (int r = row_lo; r <= row_hi; ++r) {
    for (int c = col_lo; c <= col_hi; ++c) nearest = std::min(nearest, d.at(c, r));
  }
  return nearest * max_depth;
}

Action ScriptedSeeker::act(const Observation& obs, Rng& rng) {
  const ActionBounds& b = cfg_.action_bounds;
  const double clear = forward_clearance(obs);
  Action a;
  if (obs.mask.visible) {
    // x_c grows to the right; yaw grows to the left (90 degree FOV).
    const double cam_bearing = -std::atan(obs.mask.x_c);
    const double body_bearing = obs.q_yaw + cam_bearing;
    a.dtheta = std::clamp(body_bearing, -b.rotate, b.rotate);
    a.dq_yaw = std::clamp(body_bearing - a.dtheta - obs.q_yaw, -b.camera, b.camera);
    a.dq_pitch = std::clamp(std::atan(obs.mask.y_c), -b.camera, b.camera);
    if (std::abs(body_bearing) < p_.align_tolerance) {
      a.dx = b.translate;
    } else {
      a.dx = 0.3 * b.translate;
    }
    if (clear < 0.45) {
      a.dx = 0.0;
      a.dy = (body_bearing >= 0.0 ? 1.0 : -1.0) * b.translate;
    }
    return a;
  }
  a.dq_pitch = std::clamp(p_.scan_pitch - obs.q_pitch, -b.camera, b.camera);
  a.dq_yaw = std::clamp(-obs.q_yaw, -b.camera, b.camera);
  if (clear > p_.clear_distance) {
    a.dx = b.translate;
    a.dtheta = rng.uniform(-p_.wander_turn, p_.wander_turn);
  } else {
    a.dtheta = b.rotate;
  }
  return a;
}

Action uniform_random_action(const EpisodeConfig& cfg, Rng& rng) {
  const auto bounds = cfg.action_bounds.as_array();
  std::array<double, kActionDim> v{};
  for (int i = 0; i < kActionDim; ++i) v[i] = rng.uniform(-bounds[i], bounds[i]);
  Action a = Action::from_array(v);
  if (!cfg.head_enabled) a.dq_pitch = a.dq_yaw = 0.0;
  return a;
}

Action NoisySearchPolicy::act(const Observation& obs, Rng& rng) {
  if (obs.mask.visible) return inner_.act(obs, rng);
  return uniform_random_action(cfg_, rng);
}

}  // namespace egosearch
