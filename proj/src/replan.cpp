#include "egosearch/replan.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace egosearch {

MockCharacter::MockCharacter(MockCharacterParams p) : p_(p) {
  if (!(p.lag > 0.0 && p.lag <= 1.0)) throw std::invalid_argument("mock character: lag must be in (0, 1]");
  if (!(p.max_speed > 0.0)) throw std::invalid_argument("mock character: max_speed must be positive");
  if (!(p.base_height > 0.0)) throw std::invalid_argument("mock character: base_height must be positive");
}

std::vector<CharacterPose> MockCharacter::generate(const PlanBuffer& plan, const CharacterPose& current,
                                                   int m) {
  if (plan.states.empty()) throw std::invalid_argument("mock character: empty plan");
  if (m < 0 || m > plan.steps()) throw std::invalid_argument("mock character: M exceeds plan length");
  std::vector<CharacterPose> out;
  out.reserve(static_cast<std::size_t>(m));
  CharacterPose prev = current;
  for (int k = 1; k <= m; ++k) {
    const AbstractState& goal = plan.states[static_cast<std::size_t>(k)];
    CharacterPose q;
    const Vec2 gap = goal.position() - Vec2(prev.x, prev.y);
    Vec2 move = p_.lag * gap;
    const bool capped = move.norm() > p_.max_speed;
    if (capped) move *= p_.max_speed / move.norm();
    if (p_.lag >= 1.0 && !capped) {
      q.x = goal.x;
      q.y = goal.y;
      q.yaw = goal.body_yaw;
    } else {
      q.x = prev.x + move.x();
      q.y = prev.y + move.y();
      q.yaw = wrap_angle(prev.yaw + p_.lag * angle_diff(goal.body_yaw, prev.yaw));
    }
    q.height = p_.base_height;
    if (p_.bob_amplitude != 0.0) {
      q.height += p_.bob_amplitude * std::sin(kTwoPi * p_.bob_frequency * static_cast<double>(step_));
    }
    ++step_;
    q.head_pitch = goal.q_pitch;
    q.head_yaw = goal.q_yaw;
    out.push_back(q);
    prev = q;
  }
  return out;
}

CharacterPose pose_from_state(const AbstractState& s) {
  return {s.x, s.y, s.body_yaw, s.base_height + s.height_noise, s.q_pitch, s.q_yaw};
}

PlanBuffer plan(Policy& policy, const Scene& scene, const AbstractState& s0, const Observation& o0,
                int horizon, const EpisodeConfig& cfg, Rng& rng) {
  if (horizon < 0) throw std::invalid_argument("plan: negative horizon");
  PlanBuffer b;
  b.states.push_back(s0);
  AbstractState s = s0;
  Observation o = o0;
  for (int k = 0; k < horizon; ++k) {
    const Action a = policy.act(o, rng);
    s = step_state(scene, s, a, rng, cfg);
    o = observe(scene, s, &o, cfg);
    b.states.push_back(s);
    b.actions.push_back(a);
    if (is_terminal(scene, s, o.mask.visible, cfg) != Termination::None) break;
  }
  return b;
}

namespace {

bool finite_pose(const CharacterPose& q) {
  return std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.yaw) && std::isfinite(q.height);
}

}  // namespace

ReconcileResult reconcile(Policy& policy, const Scene& scene, const std::vector<CharacterPose>& poses,
                          const AbstractState& s, const Observation& o, const EpisodeConfig& cfg,
                          Rng& rng) {
  ReconcileResult r;
  r.state = s;
  r.obs = o;
  for (const CharacterPose& q : poses) {
    if (!finite_pose(q)) throw std::invalid_argument("reconcile: non-finite character pose");
    // Camera follows the policy; the root follows the character.
    const Action a = policy.act(r.obs, rng);
    r.commands.push_back(a);
    advance_camera(r.state, clamp_action(a, cfg), cfg);
    r.state.x = q.x;
    r.state.y = q.y;
    r.state.body_yaw = wrap_angle(q.yaw);
    r.state.base_height = q.height;
    r.state.height_noise = 0.0;
    r.state.t += 1;
    CharacterPose corrected = q;
    corrected.head_pitch = r.state.q_pitch;
    corrected.head_yaw = r.state.q_yaw;
    r.poses.push_back(corrected);
    r.obs = observe(scene, r.state, &r.obs, cfg);
    ++r.renders;
    r.states.push_back(r.state);
    r.observations.push_back(r.obs);
  }
  return r;
}

std::uint64_t depth_digest(const DepthImage& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : img.pixels) {
    h ^= static_cast<std::uint64_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

bool success_at(const Scene& scene, const AbstractState& s, bool visible, const EpisodeConfig& cfg) {
  return visible && planar_distance_to_target(scene, s) <= cfg.success_radius;
}

bool penetrates(const Scene& scene, const CharacterPose& q, const FullBodyConfig& fb) {
  return check_collision(scene, Cylinder{Vec2(q.x, q.y), fb.body_radius, fb.body_height, 0.0}).collides;
}

// Sliding window of the corrected states behind the current depth stack.
class StateHistory {
 public:
  StateHistory(const AbstractState& s0, int k) : k_(k) { states_.assign(static_cast<std::size_t>(k), s0); }
  void push(const AbstractState& s) {
    states_.push_back(s);
    if (static_cast<int>(states_.size()) > k_) states_.pop_front();
  }
  std::vector<AbstractState> snapshot() const { return {states_.begin(), states_.end()}; }

 private:
  int k_;
  std::deque<AbstractState> states_;
};

struct EpisodeRecorder {
  const Scene& scene;
  const FullBodyConfig& fb;
  FullBodyEpisode ep;
  Vec2 last;

  EpisodeRecorder(const Scene& sc, const FullBodyConfig& f, const AbstractState& s0)
      : scene(sc), fb(f), last(s0.position()) {}

  void record(int attempt, const CharacterPose& q, const AbstractState& s, const DepthImage& newest,
              bool visible) {
    FrameRecord f;
    f.step = ep.metrics.steps;
    f.attempt = attempt;
    f.pose = q;
    f.state = s;
    f.depth_digest = depth_digest(newest);
    f.visible = visible;
    f.penetrating = penetrates(scene, q, fb);
    if (f.penetrating) ++ep.metrics.penetrations;
    ep.metrics.path_length += (s.position() - last).norm();
    last = s.position();
    ++ep.metrics.steps;
    ep.frames.push_back(f);
  }
};

}  // namespace

FullBodyEpisode run_episode_fullbody(Policy& policy, MotionGenerator& mg, const Scene& scene,
                                     const AbstractState& s0, const EpisodeConfig& cfg,
                                     const FullBodyConfig& fb, Rng& rng) {
  if (fb.execute < 1 || fb.horizon < 1) throw std::invalid_argument("replan: T and M must be positive");
  mg.reset();
  EpisodeRecorder rec(scene, fb, s0);
  AbstractState s = s0;
  Observation o = observe(scene, s, nullptr, cfg);
  CharacterPose current = pose_from_state(s0);
  StateHistory history(s0, cfg.stack);
  if (success_at(scene, s, o.mask.visible, cfg)) {
    rec.ep.metrics.success = true;
    return std::move(rec.ep);
  }
  while (rec.ep.metrics.steps < fb.step_budget) {
    rec.ep.plan_inputs.push_back(o);
    rec.ep.plan_input_states.push_back(history.snapshot());
    const int attempt = ++rec.ep.metrics.attempts;
    const PlanBuffer b = plan(policy, scene, s, o, fb.horizon, cfg, rng);
    if (b.steps() == 0) break;
    rec.ep.plan_lengths.push_back(b.steps());
    const int m = std::min({fb.execute, b.steps(), fb.step_budget - rec.ep.metrics.steps});
    const std::vector<CharacterPose> poses = mg.generate(b, current, m);
    const ReconcileResult r = reconcile(policy, scene, poses, s, o, cfg, rng);
    int used = m;
    for (int i = 0; i < m; ++i) {
      const Observation& oi = r.observations[static_cast<std::size_t>(i)];
      const AbstractState& si = r.states[static_cast<std::size_t>(i)];
      rec.record(attempt, r.poses[static_cast<std::size_t>(i)], si, oi.depth.back(), oi.mask.visible);
      history.push(si);
      if (success_at(scene, si, oi.mask.visible, cfg)) {
        rec.ep.metrics.success = true;
        used = i + 1;
        break;
      }
    }
    rec.ep.segment_lengths.push_back(used);
    const auto last = static_cast<std::size_t>(used - 1);
    s = r.states[last];
    o = r.observations[last];
    current = r.poses[last];
    if (rec.ep.metrics.success) break;
  }
  return std::move(rec.ep);
}

FullBodyEpisode one_step_controller(Policy& policy, MotionGenerator& mg, const Scene& scene,
                                    const AbstractState& s0, const EpisodeConfig& cfg,
                                    const FullBodyConfig& fb, int horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("one-step controller: horizon must be positive");
  mg.reset();
  EpisodeRecorder rec(scene, fb, s0);
  AbstractState s = s0;
  Observation o = observe(scene, s, nullptr, cfg);
  CharacterPose current = pose_from_state(s0);
  if (success_at(scene, s, o.mask.visible, cfg)) {
    rec.ep.metrics.success = true;
    return std::move(rec.ep);
  }
  while (rec.ep.metrics.steps < fb.step_budget) {
    const int attempt = ++rec.ep.metrics.attempts;
    const Action a = clamp_action(policy.act(o, rng), cfg);
    // Straight-line extrusion of the single command.
    PlanBuffer b;
    b.states.push_back(s);
    AbstractState head = s;
    advance_camera(head, a, cfg);
    const Vec2 per_step = rotate(Vec2(a.dx, a.dy), s.body_yaw);
    for (int k = 1; k <= horizon; ++k) {
      AbstractState sk = head;
      sk.x = s.x + k * per_step.x();
      sk.y = s.y + k * per_step.y();
      sk.body_yaw = wrap_angle(s.body_yaw + a.dtheta);
      sk.t = s.t + k;
      b.states.push_back(sk);
      b.actions.push_back(a);
    }
    const int m = std::min(horizon, fb.step_budget - rec.ep.metrics.steps);
    const std::vector<CharacterPose> poses = mg.generate(b, current, m);
    int used = m;
    for (int i = 0; i < m; ++i) {
      const CharacterPose& q = poses[static_cast<std::size_t>(i)];
      AbstractState si = head;
      si.x = q.x;
      si.y = q.y;
      si.body_yaw = wrap_angle(q.yaw);
      si.base_height = q.height;
      si.height_noise = 0.0;
      si.t = s.t + i + 1;
      // Evaluation-only render for the success check; the policy never sees it.
      const Frame f = render_frame(scene, camera_pose(si), cfg.render_width, cfg.render_height);
      const bool visible = mask_features(f.mask).visible;
      CharacterPose qh = q;
      qh.head_pitch = si.q_pitch;
      qh.head_yaw = si.q_yaw;
      rec.record(attempt, qh, si, f.depth, visible);
      current = qh;
      if (success_at(scene, si, visible, cfg)) {
        rec.ep.metrics.success = true;
        used = i + 1;
      }
      if (rec.ep.metrics.success || i + 1 == m) {
        s = si;
        break;
      }
    }
    rec.ep.segment_lengths.push_back(used);
    if (rec.ep.metrics.success) break;
    o = observe(scene, s, &o, cfg);
  }
  return std::move(rec.ep);
}

FullBodyEpisode noisy_search_controller(Policy& policy, MotionGenerator& mg, const Scene& scene,
                                        const AbstractState& s0, const EpisodeConfig& cfg,
                                        const FullBodyConfig& fb, Rng& rng) {
  NoisySearchPolicy noisy(policy, cfg);
  FullBodyConfig one = fb;
  one.horizon = 1;
  one.execute = 1;
  return run_episode_fullbody(noisy, mg, scene, s0, cfg, one, rng);
}

void write_trajectory_csv(std::ostream& out, const std::vector<FrameRecord>& frames) {
  out << "step,attempt,root_x,root_y,root_yaw,height,head_pitch,head_yaw,x,y,body_yaw,q_pitch,"
         "q_yaw,base_height,height_noise,n_col,t,depth_digest,visible,penetrating\n";
  const auto old = out.precision(17);
  for (const FrameRecord& f : frames) {
    const CharacterPose& q = f.pose;
    const AbstractState& s = f.state;
    out << f.step << ',' << f.attempt << ',' << q.x << ',' << q.y << ',' << q.yaw << ','
        << q.height << ',' << q.head_pitch << ',' << q.head_yaw << ',' << s.x << ',' << s.y << ','
        << s.body_yaw << ',' << s.q_pitch << ',' << s.q_yaw << ',' << s.base_height << ','
        << s.height_noise << ',' << s.n_col << ',' << s.t << ',' << f.depth_digest << ','
        << (f.visible ? 1 : 0) << ',' << (f.penetrating ? 1 : 0) << '\n';
  }
  out.precision(old);
}

std::vector<FrameRecord> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,attempt,", 0) != 0) {
    throw std::runtime_error("trajectory: missing header");
  }
  std::vector<FrameRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() != 20) throw std::runtime_error("trajectory: bad row '" + line + "'");
    FrameRecord f;
    f.step = std::stoi(c[0]);
    f.attempt = std::stoi(c[1]);
    f.pose = {std::stod(c[2]), std::stod(c[3]), std::stod(c[4]), std::stod(c[5]), std::stod(c[6]),
              std::stod(c[7])};
    AbstractState& s = f.state;
    s.x = std::stod(c[8]);
    s.y = std::stod(c[9]);
    s.body_yaw = std::stod(c[10]);
    s.q_pitch = std::stod(c[11]);
    s.q_yaw = std::stod(c[12]);
    s.base_height = std::stod(c[13]);
    s.height_noise = std::stod(c[14]);
    s.n_col = std::stoi(c[15]);
    s.t = std::stoi(c[16]);
    f.depth_digest = std::stoull(c[17]);
    f.visible = c[18] == "1";
    f.penetrating = c[19] == "1";
    out.push_back(f);
  }
  return out;
}

}  // namespace egosearch
