#include "egosearch/env.hpp"

#include <algorithm>
#include <cmath>

namespace egosearch {

CameraPose camera_pose(const AbstractState& s) {
  return CameraPose{Vec3(s.x, s.y, s.base_height + s.height_noise), s.body_yaw + s.q_yaw,
                    s.q_pitch};
}

Action clamp_action(const Action& a, const EpisodeConfig& cfg) {
  const ActionBounds& b = cfg.action_bounds;
  Action out{std::clamp(a.dx, -b.translate, b.translate),
             std::clamp(a.dy, -b.translate, b.translate),
             std::clamp(a.dtheta, -b.rotate, b.rotate),
             std::clamp(a.dq_pitch, -b.camera, b.camera),
             std::clamp(a.dq_yaw, -b.camera, b.camera)};
  if (!cfg.head_enabled) out.dq_pitch = out.dq_yaw = 0.0;
  return out;
}

void advance_camera(AbstractState& s, const Action& a, const EpisodeConfig& cfg) {
  const JointLimits& lim = cfg.joint_limits;
  s.q_pitch = std::clamp(s.q_pitch + a.dq_pitch, -lim.pitch, lim.pitch);
  s.q_yaw = std::clamp(s.q_yaw + a.dq_yaw, -lim.yaw, lim.yaw);
}

namespace {

constexpr double kSweepSpacing = 0.01;

struct Mover {
  const Scene& scene;
  double radius;
  double height;

  bool free_at(const Vec2& p) const {
    return !check_collision(scene, Cylinder{p, radius, height}).collides;
  }

  // Fraction of `delta` travelled before first contact (1 if none).
  double first_contact(const Vec2& from, const Vec2& delta) const {
    const double len = delta.norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / kSweepSpacing)));
    for (int k = 1; k <= n; ++k) {
      const double f = static_cast<double>(k) / n;
      if (free_at(from + f * delta)) continue;
      double lo = static_cast<double>(k - 1) / n, hi = f;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (free_at(from + mid * delta) ? lo : hi) = mid;
      }
      return lo;
    }
    return 1.0;
  }

  // Outward contact normal at p, averaged over overlapping solids.
  Vec2 contact_normal(const Vec2& p, const Vec2& fallback) const {
    Vec2 n = Vec2::Zero();
    for (const Box& b : scene.solids()) {
      if (!(b.z_min() < height && b.z_max() > 0.0)) continue;
      const Vec2 q = footprint_closest_point(b, p);
      const Vec2 d = p - q;
      if (d.norm() >= radius) continue;
      n += d.norm() > 1e-12 ? Vec2(d.normalized()) : fallback;
    }
    return n.norm() > 1e-12 ? Vec2(n.normalized()) : fallback;
  }
};

}  // namespace

AbstractState step_state(const Scene& scene, const AbstractState& s, const Action& a_in, Rng& rng,
                         const EpisodeConfig& cfg, StepInfo* info) {
  const Action a = clamp_action(a_in, cfg);
  AbstractState next = s;
  const Vec2 delta = rotate(Vec2(a.dx, a.dy), s.body_yaw);
  const Mover mover{scene, cfg.agent_radius, s.base_height};
  bool contact = false;
  const double len = delta.norm();
  if (len > 0.0) {
    const Vec2 p0 = s.position();
    if (!mover.free_at(p0)) {
      // Already penetrating (e.g. placed by an external character): let it move out.
      contact = true;
      next.x = p0.x() + delta.x();
      next.y = p0.y() + delta.y();
    } else {
      const double f = mover.first_contact(p0, delta);
      if (f >= 1.0) {
        next.x = p0.x() + delta.x();
        next.y = p0.y() + delta.y();
      } else {
        contact = true;
        const double safe = std::max(0.0, f - cfg.contact_epsilon / len);
        const Vec2 p1 = p0 + safe * delta;
        Vec2 result = p1;
        // Slide the remainder along the contact tangent; cancel if that collides too.
        const Vec2 n = mover.contact_normal(p0 + std::min(1.0, f + 1e-9) * delta, -delta / len);
        Vec2 rem = (1.0 - safe) * delta;
        const double into = rem.dot(n);
        if (into < 0.0) rem -= into * n;
        if (rem.norm() > 1e-9 && mover.first_contact(p1, rem) >= 1.0) result = p1 + rem;
        next.x = result.x();
        next.y = result.y();
      }
    }
  }
  if (contact) ++next.n_col;
  next.body_yaw = wrap_angle(s.body_yaw + a.dtheta);
  advance_camera(next, a, cfg);
  if (cfg.height_noise) {
    next.height_noise = rng.uniform(-cfg.height_noise_range, cfg.height_noise_range);
  }
  next.t = s.t + 1;
  if (info != nullptr) {
    info->contact = contact;
    info->attempted = delta;
  }
  return next;
}

Observation push_frame(const Observation* prev, DepthImage frame, const MaskFeature& mask,
                       const AbstractState& s, int stack) {
  Observation o;
  if (prev == nullptr || prev->depth.empty()) {
    o.depth.assign(static_cast<std::size_t>(stack), frame);
  } else {
    o.depth.reserve(static_cast<std::size_t>(stack));
    const std::size_t keep = std::min<std::size_t>(prev->depth.size(), stack - 1);
    o.depth.assign(prev->depth.end() - static_cast<std::ptrdiff_t>(keep), prev->depth.end());
    while (o.depth.size() + 1 < static_cast<std::size_t>(stack)) {
      o.depth.insert(o.depth.begin(), o.depth.front());
    }
    o.depth.push_back(std::move(frame));
  }
  o.mask = mask;
  o.q_pitch = s.q_pitch;
  o.q_yaw = s.q_yaw;
  return o;
}

Observation observe(const Scene& scene, const AbstractState& s, const Observation* prev,
                    const EpisodeConfig& cfg, CropMode crop_mode, Rng* rng) {
  Frame f = render_frame(scene, camera_pose(s), cfg.render_width, cfg.render_height);
  DepthImage d = crop(f.depth, crop_mode, cfg.crop_width, cfg.crop_height, rng);
  return push_frame(prev, std::move(d), mask_features(f.mask), s, cfg.stack);
}

double planar_distance_to_target(const Scene& scene, const AbstractState& s) {
  return (scene.target().position.head<2>() - s.position()).norm();
}

RewardTerms compute_reward(const Scene& scene, const AbstractState& s_next, bool target_visible,
                           bool terminal_success, const EpisodeConfig& cfg) {
  RewardTerms r;
  const double dist = planar_distance_to_target(scene, s_next);
  r.success = dist <= cfg.success_radius ? cfg.success_reward : 0.0;
  r.distance = target_visible ? -dist : 0.0;
  r.live = cfg.live_penalty;
  r.collision = std::clamp(cfg.collision_step * s_next.n_col, cfg.collision_floor, 0.0);
  r.terminal = terminal_success ? cfg.terminal_bonus : 0.0;
  const auto terms = r.as_array();
  r.total = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) r.total += cfg.weights[k] * terms[k];
  return r;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Success:
      return "success";
    case Termination::Timeout:
      return "timeout";
    case Termination::None:
      break;
  }
  return "none";
}

Termination is_terminal(const Scene& scene, const AbstractState& s, bool target_visible,
                        const EpisodeConfig& cfg) {
  if (target_visible && planar_distance_to_target(scene, s) <= cfg.success_radius) {
    return Termination::Success;
  }
  if (s.t >= cfg.t_max) return Termination::Timeout;
  return Termination::None;
}

Env::Env(std::shared_ptr<const Scene> base, EpisodeConfig cfg, SceneParams params,
         std::uint64_t seed)
    : base_(std::move(base)), scene_(*base_), cfg_(cfg), params_(params), rng_(seed) {}

void Env::set_scene(std::shared_ptr<const Scene> base) {
  base_ = std::move(base);
  scene_ = *base_;
  done_ = true;
}

const Observation& Env::start(const AbstractState& s) {
  state_ = s;
  obs_ = observe(scene_, state_, nullptr, cfg_);
  done_ = false;
  return obs_;
}

const Observation& Env::reset(std::optional<double> fixed_height, std::optional<TargetMode> mode) {
  const TargetMode m = mode.value_or(cfg_.target_mode);
  scene_ = *base_;
  const Vec3 target = sample_target_location(scene_, rng_, m, params_);
  scene_ = base_->with_target(TargetObject{target, base_->target().radius});
  Pose2 pose;
  for (int attempt = 0;; ++attempt) {
    pose = sample_free_pose(scene_, rng_, cfg_.agent_radius);
    const double d = (Vec2(pose.x, pose.y) - target.head<2>()).norm();
    if (d > cfg_.agent_radius + scene_.target().radius || attempt > 1000) break;
  }
  double height = 0.0;
  if (fixed_height) {
    height = *fixed_height;
  } else if (cfg_.randomize_height) {
    height = rng_.uniform(cfg_.height_min, cfg_.height_max);
  } else {
    height = 0.5 * (cfg_.height_min + cfg_.height_max);
  }
  AbstractState s;
  s.x = pose.x;
  s.y = pose.y;
  s.body_yaw = pose.yaw;
  s.base_height = height;
  s.height_noise =
      cfg_.height_noise ? rng_.uniform(-cfg_.height_noise_range, cfg_.height_noise_range) : 0.0;
  return start(s);
}

const Observation& Env::reset_to(const Vec3& target, const Pose2& agent, double base_height) {
  scene_ = base_->with_target(TargetObject{target, base_->target().radius});
  AbstractState s;
  s.x = agent.x;
  s.y = agent.y;
  s.body_yaw = agent.yaw;
  s.base_height = base_height;
  s.height_noise =
      cfg_.height_noise ? rng_.uniform(-cfg_.height_noise_range, cfg_.height_noise_range) : 0.0;
  return start(s);
}

StepResult Env::step(const Action& a) {
  if (done_) throw std::logic_error("step() on a finished episode; call reset()");
  StepResult out;
  state_ = step_state(scene_, state_, a, rng_, cfg_, &out.info);
  obs_ = observe(scene_, state_, &obs_, cfg_);
  const bool visible = obs_.mask.visible;
  out.termination = is_terminal(scene_, state_, visible, cfg_);
  state_.found = out.termination == Termination::Success;
  out.reward = compute_reward(scene_, state_, visible, state_.found, cfg_);
  done_ = out.termination != Termination::None;
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "t,x,y,body_yaw,q_pitch,q_yaw,base_height,height_noise,n_col,found,"
         "dx,dy,dtheta,dq_pitch,dq_yaw,r_success,r_distance,r_live,r_collision,r_terminal,"
         "r_total,termination\n";
  const auto old = out.precision(17);
  for (const TraceRecord& r : trace) {
    const AbstractState& s = r.state;
    const Action& a = r.action;
    const RewardTerms& w = r.reward;
    out << s.t << ',' << s.x << ',' << s.y << ',' << s.body_yaw << ',' << s.q_pitch << ','
        << s.q_yaw << ',' << s.base_height << ',' << s.height_noise << ',' << s.n_col << ','
        << (s.found ? 1 : 0) << ',' << a.dx << ',' << a.dy << ',' << a.dtheta << ','
        << a.dq_pitch << ',' << a.dq_yaw << ',' << w.success << ',' << w.distance << ','
        << w.live << ',' << w.collision << ',' << w.terminal << ',' << w.total << ','
        << to_string(r.termination) << '\n';
  }
  out.precision(old);
}

}  // namespace egosearch
