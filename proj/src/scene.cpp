#include "egosearch/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace egosearch {

namespace {

Vec2 to_local(const Box& b, const Vec2& p) {
  return rotate(p - b.center.head<2>(), -b.yaw);
}

double point_rect_distance(const Vec2& p, double hx, double hy) {
  const double dx = std::max(std::abs(p.x()) - hx, 0.0);
  const double dy = std::max(std::abs(p.y()) - hy, 0.0);
  return std::hypot(dx, dy);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& c) {
  const Vec2 d = c - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (a + t * d - p).norm();
}

// Slab test of segment a->c against [-hx,hx] x [-hy,hy].
bool segment_hits_rect(const Vec2& a, const Vec2& c, double hx, double hy) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = c - a;
  const double lo[2] = {-hx, -hy};
  const double hi[2] = {hx, hy};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (a[k] < lo[k] || a[k] > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - a[k]) / d[k];
    double tb = (hi[k] - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

bool height_overlap(const Box& b, double base, double height) {
  return base < b.z_max() && base + height > b.z_min();
}

// Conservative plan-view radius of a box footprint.
double footprint_radius(const Box& b) { return std::hypot(b.half.x(), b.half.y()); }

// Distance from a sphere centre to the closest point of an oriented box.
double point_box_distance(const Box& b, const Vec3& p) {
  const Vec2 local = to_local(b, p.head<2>());
  const double dx = std::max(std::abs(local.x()) - b.half.x(), 0.0);
  const double dy = std::max(std::abs(local.y()) - b.half.y(), 0.0);
  const double dz = std::max(std::abs(p.z() - b.center.z()) - b.half.z(), 0.0);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool sphere_clear(const Scene& scene, const Vec3& p, double radius) {
  for (const Box& b : scene.solids()) {
    if (point_box_distance(b, p) < radius - 1e-9) return false;
  }
  return true;
}

// A free standing spot exists within `reach` of p.
bool reachable_from_floor(const Scene& scene, const Vec2& p, double reach) {
  const double res = scene.nav_resolution();
  const int span = static_cast<int>(std::ceil(reach / res)) + 1;
  const auto [c0, r0] = scene.cell_of(p);
  for (int r = r0 - span; r <= r0 + span; ++r) {
    for (int c = c0 - span; c <= c0 + span; ++c) {
      if (c < 0 || r < 0 || c >= scene.grid_cols() || r >= scene.grid_rows()) continue;
      if (!scene.cell_free(c, r)) continue;
      if ((scene.cell_center(c, r) - p).norm() <= reach) return true;
    }
  }
  return false;
}

}  // namespace

double footprint_distance(const Box& b, const Vec2& p) {
  return point_rect_distance(to_local(b, p), b.half.x(), b.half.y());
}

Vec2 footprint_closest_point(const Box& b, const Vec2& p) {
  const Vec2 local = to_local(b, p);
  const Vec2 q(std::clamp(local.x(), -b.half.x(), b.half.x()),
               std::clamp(local.y(), -b.half.y(), b.half.y()));
  return rotate(q, b.yaw) + b.center.head<2>();
}

double footprint_segment_distance(const Box& b, const Vec2& a, const Vec2& c) {
  const Vec2 la = to_local(b, a), lc = to_local(b, c);
  const double hx = b.half.x(), hy = b.half.y();
  if (segment_hits_rect(la, lc, hx, hy)) return 0.0;
  double d = std::min(point_rect_distance(la, hx, hy), point_rect_distance(lc, hx, hy));
  for (int sx = -1; sx <= 1; sx += 2) {
    for (int sy = -1; sy <= 1; sy += 2) {
      d = std::min(d, point_segment_distance(Vec2(sx * hx, sy * hy), la, lc));
    }
  }
  return d;
}

bool box_contains(const Box& b, const Vec3& p, double margin) {
  const Vec2 local = to_local(b, p.head<2>());
  return std::abs(local.x()) <= b.half.x() - margin &&
         std::abs(local.y()) <= b.half.y() - margin &&
         std::abs(p.z() - b.center.z()) <= b.half.z() - margin;
}

std::vector<Box> cabinet_panels(const Cabinet& cab) {
  const Box& s = cab.shell;
  const double hx = s.half.x(), hy = s.half.y(), hz = s.half.z(), w = cab.wall;
  struct Local {
    Vec3 offset, half;
  };
  const Local parts[5] = {
      {{0.0, 0.0, -hz + w / 2}, {hx, hy, w / 2}},  // floor
      {{0.0, 0.0, hz - w / 2}, {hx, hy, w / 2}},   // top
      {{-hx + w / 2, 0.0, 0.0}, {w / 2, hy, hz}},  // back
      {{0.0, hy - w / 2, 0.0}, {hx, w / 2, hz}},   // left
      {{0.0, -hy + w / 2, 0.0}, {hx, w / 2, hz}},  // right
  };
  std::vector<Box> out;
  out.reserve(5);
  for (const Local& p : parts) {
    const Vec2 xy = rotate(p.offset.head<2>(), s.yaw) + s.center.head<2>();
    out.push_back(Box{Vec3(xy.x(), xy.y(), s.center.z() + p.offset.z()), p.half, s.yaw});
  }
  return out;
}

const char* to_string(TargetMode m) {
  return m == TargetMode::Everywhere ? "everywhere" : "exclude_cabinets";
}

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "everywhere") return TargetMode::Everywhere;
  if (s == "exclude_cabinets") return TargetMode::ExcludeCabinets;
  throw SceneError("unknown target mode '" + s + "'");
}

Scene::Scene(Bounds bounds, std::vector<Box> walls, std::vector<Box> furniture,
             std::vector<Cabinet> cabinets, TargetObject target, double nav_resolution,
             double agent_radius, double agent_height)
    : bounds_(bounds),
      walls_(std::move(walls)),
      furniture_(std::move(furniture)),
      cabinets_(std::move(cabinets)),
      target_(target),
      nav_resolution_(nav_resolution),
      agent_radius_(agent_radius),
      agent_height_(agent_height) {
  if (!(nav_resolution_ > 0.0)) throw SceneError("nav_resolution must be positive");
  if (!(target_.radius > 0.0)) throw SceneError("target radius must be positive");
  auto check = [](const Box& b) {
    if (!(b.half.x() > 0.0 && b.half.y() > 0.0 && b.half.z() > 0.0)) {
      throw SceneError("box half-extents must be strictly positive");
    }
  };
  for (const Box& b : walls_) check(b);
  for (const Box& b : furniture_) check(b);
  for (const Cabinet& c : cabinets_) check(c.shell);
  rebuild();
}

void Scene::rebuild() {
  solids_.clear();
  solids_.insert(solids_.end(), walls_.begin(), walls_.end());
  solids_.insert(solids_.end(), furniture_.begin(), furniture_.end());
  for (const Cabinet& c : cabinets_) {
    const auto panels = cabinet_panels(c);
    solids_.insert(solids_.end(), panels.begin(), panels.end());
  }

  cols_ = std::max(1, static_cast<int>(std::floor(bounds_.width() / nav_resolution_ + 0.5)));
  rows_ = std::max(1, static_cast<int>(std::floor(bounds_.depth() / nav_resolution_ + 0.5)));
  free_.assign(static_cast<std::size_t>(cols_) * rows_, 0);
  free_count_ = 0;
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const Vec2 p = cell_center(c, r);
      const bool inside = p.x() - agent_radius_ >= bounds_.x_min &&
                          p.x() + agent_radius_ <= bounds_.x_max &&
                          p.y() - agent_radius_ >= bounds_.y_min &&
                          p.y() + agent_radius_ <= bounds_.y_max;
      if (!inside) continue;
      const bool hit = check_collision(*this, Cylinder{p, agent_radius_, agent_height_}).collides;
      if (!hit) {
        free_[static_cast<std::size_t>(r) * cols_ + c] = 1;
        ++free_count_;
      }
    }
  }
}

Scene Scene::with_target(const TargetObject& t) const {
  Scene s = *this;
  s.target_ = t;
  return s;
}

Vec2 Scene::cell_center(int col, int row) const {
  return {bounds_.x_min + (col + 0.5) * nav_resolution_,
          bounds_.y_min + (row + 0.5) * nav_resolution_};
}

std::pair<int, int> Scene::cell_of(const Vec2& p) const {
  const int c = static_cast<int>(std::floor((p.x() - bounds_.x_min) / nav_resolution_));
  const int r = static_cast<int>(std::floor((p.y() - bounds_.y_min) / nav_resolution_));
  return {std::clamp(c, 0, cols_ - 1), std::clamp(r, 0, rows_ - 1)};
}

bool Scene::operator==(const Scene& o) const {
  return bounds_ == o.bounds_ && walls_ == o.walls_ && furniture_ == o.furniture_ &&
         cabinets_ == o.cabinets_ && target_ == o.target_ &&
         nav_resolution_ == o.nav_resolution_ && agent_radius_ == o.agent_radius_ &&
         agent_height_ == o.agent_height_;
}

CollisionResult check_collision(const Scene& scene, const Cylinder& cyl) {
  CollisionResult out;
  for (const Box& b : scene.solids()) {
    if (!height_overlap(b, cyl.base, cyl.height)) continue;
    if (footprint_distance(b, cyl.center) < cyl.radius) {
      out.collides = true;
      ++out.contact_count;
    }
  }
  return out;
}

bool segment_clear(const Scene& scene, const Vec2& a, const Vec2& b, double radius,
                   double height) {
  for (const Box& box : scene.solids()) {
    if (!height_overlap(box, 0.0, height)) continue;
    if (footprint_segment_distance(box, a, b) < radius) return false;
  }
  return true;
}

int count_free_components(const Scene& scene) {
  const int cols = scene.grid_cols(), rows = scene.grid_rows();
  std::vector<int> label(static_cast<std::size_t>(cols) * rows, -1);
  int components = 0;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!scene.cell_free(c, r) || label[static_cast<std::size_t>(r) * cols + c] >= 0) continue;
      stack.assign(1, {c, r});
      label[static_cast<std::size_t>(r) * cols + c] = components;
      while (!stack.empty()) {
        const auto [cc, rr] = stack.back();
        stack.pop_back();
        const int dc[4] = {1, -1, 0, 0}, dr[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nc = cc + dc[k], nr = rr + dr[k];
          if (nc < 0 || nr < 0 || nc >= cols || nr >= rows) continue;
          const std::size_t idx = static_cast<std::size_t>(nr) * cols + nc;
          if (!scene.cell_free(nc, nr) || label[idx] >= 0) continue;
          label[idx] = components;
          stack.emplace_back(nc, nr);
        }
      }
      ++components;
    }
  }
  return components;
}

namespace {

std::vector<Box> make_walls(const SceneParams& p) {
  const Bounds& b = p.bounds;
  const double t = p.wall_thickness / 2, hz = p.wall_height / 2;
  const double cx = (b.x_min + b.x_max) / 2, cy = (b.y_min + b.y_max) / 2;
  return {
      Box{{cx, b.y_max - t, hz}, {b.width() / 2, t, hz}, 0.0},
      Box{{cx, b.y_min + t, hz}, {b.width() / 2, t, hz}, 0.0},
      Box{{b.x_max - t, cy, hz}, {t, b.depth() / 2, hz}, 0.0},
      Box{{b.x_min + t, cy, hz}, {t, b.depth() / 2, hz}, 0.0},
  };
}

bool overlaps_any(const Box& b, const std::vector<Box>& others, double margin) {
  for (const Box& o : others) {
    const double d = (b.center.head<2>() - o.center.head<2>()).norm();
    if (d < footprint_radius(b) + footprint_radius(o) + margin) return true;
  }
  return false;
}

std::optional<Scene> try_generate(Rng& rng, const SceneParams& p) {
  const Bounds& bd = p.bounds;
  std::vector<Box> walls = make_walls(p);
  const double inset = p.wall_thickness;

  const int n_part = rng.uniform_int(p.partition_min, p.partition_max);
  for (int i = 0; i < n_part; ++i) {
    // A partial division jutting out from one wall.
    const bool along_x = rng.uniform01() < 0.5;
    const double span = along_x ? bd.width() : bd.depth();
    const double len = rng.uniform(0.3, 0.55) * span;
    const bool from_low = rng.uniform01() < 0.5;
    const double pos = rng.uniform(0.3, 0.7);
    const double t = p.wall_thickness / 2, hz = p.wall_height / 2;
    if (along_x) {
      const double y = bd.y_min + pos * bd.depth();
      const double x = from_low ? bd.x_min + inset + len / 2 : bd.x_max - inset - len / 2;
      walls.push_back(Box{{x, y, hz}, {len / 2, t, hz}, 0.0});
    } else {
      const double x = bd.x_min + pos * bd.width();
      const double y = from_low ? bd.y_min + inset + len / 2 : bd.y_max - inset - len / 2;
      walls.push_back(Box{{x, y, hz}, {t, len / 2, hz}, 0.0});
    }
  }

  std::vector<Box> placed(walls.begin() + 4, walls.end());

  std::vector<Cabinet> cabinets;
  const int n_cab = rng.uniform_int(p.cabinet_min, p.cabinet_max);
  for (int i = 0; i < n_cab; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
      const double hx = rng.uniform(0.17, 0.2);
      const double hy = rng.uniform(0.3, 0.5);
      const double hz = rng.uniform(0.25, 0.45);
      const int side = rng.uniform_int(0, 3);
      double x = 0, y = 0, yaw = 0;
      const double gap = inset + hx + 0.01;
      switch (side) {
        case 0:  // against +y wall, open face toward -y
          x = rng.uniform(bd.x_min + 1.0, bd.x_max - 1.0), y = bd.y_max - gap, yaw = -kPi / 2;
          break;
        case 1:
          x = rng.uniform(bd.x_min + 1.0, bd.x_max - 1.0), y = bd.y_min + gap, yaw = kPi / 2;
          break;
        case 2:
          x = bd.x_max - gap, y = rng.uniform(bd.y_min + 1.0, bd.y_max - 1.0), yaw = kPi;
          break;
        default:
          x = bd.x_min + gap, y = rng.uniform(bd.y_min + 1.0, bd.y_max - 1.0), yaw = 0.0;
          break;
      }
      Cabinet cab;
      cab.shell = Box{{x, y, hz}, {hx, hy, hz}, yaw};
      cab.wall = 0.03;
      if (overlaps_any(cab.shell, placed, 0.05)) continue;
      const double w = cab.wall;
      // Interior region, strictly inside the shell panels.
      const double ix_lo = -hx + w + 0.01, ix_hi = hx - 0.01;
      const Vec2 ic = rotate(Vec2((ix_lo + ix_hi) / 2, 0.0), yaw) + Vec2(x, y);
      cab.interior_zone = Box{{ic.x(), ic.y(), hz},
                              {(ix_hi - ix_lo) / 2, hy - w - 0.01, hz - w - 0.01},
                              yaw};
      cabinets.push_back(cab);
      placed.push_back(cab.shell);
      ok = true;
    }
    if (!ok) return std::nullopt;
  }

  std::vector<Box> furniture;
  const int n_furn = rng.uniform_int(p.furniture_min, p.furniture_max);
  for (int i = 0; i < n_furn; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
      const double kind = rng.uniform01();
      double hz;
      if (kind < 0.35) {
        hz = rng.uniform(0.2, 0.3);  // low: sofa, bed, ottoman
      } else if (kind < 0.8) {
        hz = rng.uniform(0.35, 0.47);  // tables, counters
      } else {
        hz = rng.uniform(0.8, 1.0);  // shelves
      }
      const double hx = rng.uniform(0.2, 0.75);
      const double hy = rng.uniform(0.2, 0.5);
      const double yaw = rng.uniform(0.0, kPi);
      const double r = std::hypot(hx, hy);
      const double x = rng.uniform(bd.x_min + inset + r, bd.x_max - inset - r);
      const double y = rng.uniform(bd.y_min + inset + r, bd.y_max - inset - r);
      Box b{{x, y, hz}, {hx, hy, hz}, yaw};
      if (overlaps_any(b, placed, 0.05)) continue;
      furniture.push_back(b);
      placed.push_back(b);
      ok = true;
    }
    if (!ok) return std::nullopt;
  }

  Scene scene(bd, std::move(walls), std::move(furniture), std::move(cabinets),
              TargetObject{Vec3::Zero(), p.target_radius}, p.nav_resolution, p.agent_radius,
              p.agent_height);
  if (scene.free_cell_count() == 0 || count_free_components(scene) != 1) return std::nullopt;
  const Vec3 t = sample_target_location(scene, rng, TargetMode::ExcludeCabinets, p);
  return scene.with_target(TargetObject{t, p.target_radius});
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  if (params.furniture_min > params.furniture_max || params.cabinet_min > params.cabinet_max ||
      params.partition_min > params.partition_max || params.furniture_min < 0 ||
      params.cabinet_min < 0 || params.partition_min < 0) {
    throw SceneError("invalid count range in scene parameters");
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    try {
      if (auto s = try_generate(rng, params)) return std::move(*s);
    } catch (const SceneError&) {
      // No valid target surface in this layout; draw another one.
    }
  }
  throw SceneError("scene generation failed after " + std::to_string(params.max_retries) +
                   " attempts (seed " + std::to_string(seed) + ")");
}

Pose2 sample_free_pose(const Scene& scene, Rng& rng, double clearance) {
  if (clearance < scene.agent_radius()) {
    throw SceneError("clearance must be at least the agent radius");
  }
  if (scene.free_cell_count() == 0) throw SceneError("scene has no free space");
  const Bounds& b = scene.bounds();
  for (int attempt = 0; attempt < 20000; ++attempt) {
    const Vec2 p(rng.uniform(b.x_min, b.x_max), rng.uniform(b.y_min, b.y_max));
    if (p.x() - clearance < b.x_min || p.x() + clearance > b.x_max ||
        p.y() - clearance < b.y_min || p.y() + clearance > b.y_max) {
      continue;
    }
    if (check_collision(scene, Cylinder{p, clearance, scene.agent_height()}).collides) continue;
    const auto [c, r] = scene.cell_of(p);
    if (!scene.cell_free(c, r)) continue;
    return Pose2{p.x(), p.y(), rng.uniform(0.0, kTwoPi)};
  }
  throw SceneError("no free pose found");
}

Surface classify_target(const Scene& scene, const Vec3& p, double radius) {
  const double eps = 1e-6;
  for (const Cabinet& c : scene.cabinets()) {
    if (box_contains(c.interior_zone, p, -eps)) return Surface::CabinetInterior;
  }
  if (std::abs(p.z() - radius) < eps) return Surface::Floor;
  for (const Box& f : scene.furniture()) {
    if (std::abs(p.z() - radius - f.z_max()) < eps && footprint_distance(f, p.head<2>()) == 0.0) {
      return Surface::Furniture;
    }
  }
  return Surface::None;
}

Vec3 sample_target_location(const Scene& scene, Rng& rng, TargetMode mode,
                            const SceneParams& params) {
  const double rad = scene.target().radius;
  const Bounds& b = scene.bounds();
  const bool use_cabinets = mode == TargetMode::Everywhere && !scene.cabinets().empty();
  // Surface choice weighted by area (floor, furniture tops, cabinet floors).
  std::vector<double> weights;
  weights.push_back(b.width() * b.depth());
  for (const Box& f : scene.furniture()) weights.push_back(4.0 * f.half.x() * f.half.y());
  if (use_cabinets) {
    for (const Cabinet& c : scene.cabinets()) {
      // Cabinets are small; upweight so interior targets are not vanishingly rare.
      weights.push_back(4.0 * c.interior_zone.half.x() * c.interior_zone.half.y() * 10.0);
    }
  }
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  const int n_furn = static_cast<int>(scene.furniture().size());
  for (int attempt = 0; attempt < 5000; ++attempt) {
    const int k = pick(rng.engine());
    Vec3 p;
    if (k == 0) {
      p = Vec3(rng.uniform(b.x_min, b.x_max), rng.uniform(b.y_min, b.y_max), rad);
    } else if (k <= n_furn) {
      const Box& f = scene.furniture()[k - 1];
      const Vec2 local(rng.uniform(-f.half.x(), f.half.x()), rng.uniform(-f.half.y(), f.half.y()));
      const Vec2 xy = rotate(local, f.yaw) + f.center.head<2>();
      p = Vec3(xy.x(), xy.y(), f.z_max() + rad);
    } else {
      const Cabinet& c = scene.cabinets()[k - 1 - n_furn];
      const Box& z = c.interior_zone;
      // The local +x side is the open face, so the sphere may overhang it;
      // otherwise nothing inside would be within reach of a standing agent.
      const double back = -z.half.x() + rad, hy = z.half.y() - rad;
      if (back >= z.half.x() || hy <= 0.0) continue;
      const Vec2 local(rng.uniform(back, z.half.x()), rng.uniform(-hy, hy));
      const Vec2 xy = rotate(local, z.yaw) + z.center.head<2>();
      p = Vec3(xy.x(), xy.y(), c.shell.z_min() + c.wall + rad);
    }
    if (!sphere_clear(scene, p, rad)) continue;
    if (mode == TargetMode::ExcludeCabinets || k <= n_furn) {
      bool inside = false;
      for (const Cabinet& c : scene.cabinets()) inside |= box_contains(c.interior_zone, p, -1e-6);
      if (inside) continue;
    }
    if (!reachable_from_floor(scene, p.head<2>(), params.reach_distance)) continue;
    return p;
  }
  throw SceneError("no valid target surface");
}

std::optional<std::pair<int, int>> nearest_free_cell(const Scene& scene, const Vec2& p) {
  const auto [c0, r0] = scene.cell_of(p);
  const int max_ring = std::max(scene.grid_cols(), scene.grid_rows());
  for (int ring = 0; ring <= max_ring; ++ring) {
    std::optional<std::pair<int, int>> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int r = r0 - ring; r <= r0 + ring; ++r) {
      for (int c = c0 - ring; c <= c0 + ring; ++c) {
        if (std::max(std::abs(r - r0), std::abs(c - c0)) != ring) continue;
        if (c < 0 || r < 0 || c >= scene.grid_cols() || r >= scene.grid_rows()) continue;
        if (!scene.cell_free(c, r)) continue;
        const double d = (scene.cell_center(c, r) - p).squaredNorm();
        if (d < best_d) best_d = d, best = std::make_pair(c, r);
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

namespace {

struct GridSearch {
  double cost = 0.0;
  std::vector<std::pair<int, int>> path;
};

GridSearch astar(const Scene& scene, std::pair<int, int> from, std::pair<int, int> to,
                 bool want_path) {
  const int cols = scene.grid_cols(), rows = scene.grid_rows();
  if (!scene.cell_free(from.first, from.second) || !scene.cell_free(to.first, to.second)) {
    throw SceneError("path endpoint is not in free space");
  }
  const double res = scene.nav_resolution();
  const double diag = std::sqrt(2.0) * res;
  const auto index = [cols](int c, int r) { return static_cast<std::size_t>(r) * cols + c; };
  const auto heuristic = [&](int c, int r) {
    const double dx = std::abs(c - to.first), dy = std::abs(r - to.second);
    return res * (std::max(dx, dy) - std::min(dx, dy)) + diag * std::min(dx, dy);
  };
  const std::size_t n = static_cast<std::size_t>(cols) * rows;
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const std::size_t start = index(from.first, from.second), goal = index(to.first, to.second);
  g[start] = 0.0;
  open.emplace(heuristic(from.first, from.second), start);
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == goal) break;
    const int c = static_cast<int>(cur % cols), r = static_cast<int>(cur / cols);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nc = c + dc, nr = r + dr;
        if (nc < 0 || nr < 0 || nc >= cols || nr >= rows || !scene.cell_free(nc, nr)) continue;
        // No corner cutting: both orthogonal neighbours must be free.
        if (dr != 0 && dc != 0 && (!scene.cell_free(c + dc, r) || !scene.cell_free(c, r + dr))) {
          continue;
        }
        const std::size_t ni = index(nc, nr);
        if (closed[ni]) continue;
        const double ng = g[cur] + ((dr != 0 && dc != 0) ? diag : res);
        if (ng < g[ni]) {
          g[ni] = ng;
          parent[ni] = static_cast<int>(cur);
          open.emplace(ng + heuristic(nc, nr), ni);
        }
      }
    }
  }
  if (!closed[goal]) throw SceneError("target cell unreachable from start cell");
  GridSearch out;
  out.cost = g[goal];
  if (want_path) {
    for (int at = static_cast<int>(goal); at >= 0; at = parent[static_cast<std::size_t>(at)]) {
      out.path.emplace_back(at % cols, at / cols);
    }
    std::reverse(out.path.begin(), out.path.end());
  }
  return out;
}

}  // namespace

double grid_distance(const Scene& scene, std::pair<int, int> from, std::pair<int, int> to) {
  return astar(scene, from, to, false).cost;
}

double shortest_path_length(const Scene& scene, const Vec2& from_in, const Vec2& to_in) {
  if (from_in == to_in) return 0.0;
  // Canonical endpoint order makes the result exactly symmetric.
  const bool swap = std::make_pair(to_in.x(), to_in.y()) < std::make_pair(from_in.x(), from_in.y());
  const Vec2& from = swap ? to_in : from_in;
  const Vec2& to = swap ? from_in : to_in;
  const double radius = scene.agent_radius(), height = scene.agent_height();
  if (segment_clear(scene, from, to, radius, height)) return (to - from).norm();

  const auto cf = nearest_free_cell(scene, from);
  const auto ct = nearest_free_cell(scene, to);
  if (!cf || !ct) throw SceneError("no free cell near path endpoint");
  const GridSearch search = astar(scene, *cf, *ct, true);

  std::vector<Vec2> pts;
  pts.reserve(search.path.size() + 2);
  pts.push_back(from);
  for (const auto& [c, r] : search.path) pts.push_back(scene.cell_center(c, r));
  pts.push_back(to);

  // Greedy string pulling over the grid path.
  double length = 0.0;
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = i + 1;
    while (j + 1 < pts.size() && segment_clear(scene, pts[i], pts[j + 1], radius, height)) ++j;
    length += (pts[j] - pts[i]).norm();
    i = j;
  }
  return length;
}

}  // namespace egosearch
