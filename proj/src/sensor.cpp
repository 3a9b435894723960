#include "egosearch/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace egosearch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A solid pre-transformed for repeated ray queries.
struct RaySolid {
  Vec3 center;
  Vec3 half;
  double c, s;  // cos/sin of yaw
};

std::vector<RaySolid> prepare(const Scene& scene) {
  std::vector<RaySolid> out;
  out.reserve(scene.solids().size());
  for (const Box& b : scene.solids()) {
    out.push_back({b.center, b.half, std::cos(b.yaw), std::sin(b.yaw)});
  }
  return out;
}

double ray_box(const RaySolid& b, const Vec3& origin, const Vec3& dir) {
  const double ox = origin.x() - b.center.x(), oy = origin.y() - b.center.y();
  // Rotate into the box frame by -yaw.
  const double o[3] = {b.c * ox + b.s * oy, -b.s * ox + b.c * oy, origin.z() - b.center.z()};
  const double d[3] = {b.c * dir.x() + b.s * dir.y(), -b.s * dir.x() + b.c * dir.y(), dir.z()};
  double t0 = -kInf, t1 = kInf;
  for (int k = 0; k < 3; ++k) {
    const double h = b.half[k];
    if (d[k] == 0.0) {
      if (o[k] < -h || o[k] > h) return kInf;
      continue;
    }
    const double inv = 1.0 / d[k];
    double ta = (-h - o[k]) * inv, tb = (h - o[k]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return kInf;
  }
  if (t1 < 0.0) return kInf;
  return std::max(t0, 0.0);
}

double cast_prepared(const std::vector<RaySolid>& solids, const Vec3& origin, const Vec3& dir) {
  double best = kInf;
  for (const RaySolid& b : solids) best = std::min(best, ray_box(b, origin, dir));
  return best;
}

}  // namespace

Vec3 pixel_ray(const CameraPose& cam, const CameraModel& model, int width, int height, int col,
               int row) {
  const double cy = std::cos(cam.yaw), sy = std::sin(cam.yaw);
  const double cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
  const Vec3 forward(cp * cy, cp * sy, sp);
  const Vec3 right(sy, -cy, 0.0);
  const Vec3 up(-sp * cy, -sp * sy, cp);
  const double tan_h = std::tan(model.hfov / 2);
  // Square pixels: vertical extent scales with height / width.
  const double u = static_cast<double>(2 * col + 1 - width) / width * tan_h;
  const double v = static_cast<double>(height - 2 * row - 1) / width * tan_h;
  return (forward + u * right + v * up).normalized();
}

double cast_solid(const Scene& scene, const Vec3& origin, const Vec3& dir) {
  return cast_prepared(prepare(scene), origin, dir);
}

double cast_target(const TargetObject& target, const Vec3& origin, const Vec3& dir) {
  const Vec3 oc = origin - target.position;
  const double b = dir.dot(oc);
  const double c = oc.squaredNorm() - target.radius * target.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return kInf;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t < 0.0) t = -b + root;
  return t < 0.0 ? kInf : t;
}

Frame render_frame(const Scene& scene, const CameraPose& cam, int width, int height,
                   const CameraModel& model) {
  if (width < 1 || height < 1) throw std::invalid_argument("image size must be positive");
  const auto solids = prepare(scene);
  Frame f{DepthImage(width, height, 1.0), MaskImage(width, height, 0)};
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const Vec3 dir = pixel_ray(cam, model, width, height, col, row);
      const double t = cast_prepared(solids, cam.position, dir);
      f.depth.at(col, row) = std::min(t, model.max_depth) / model.max_depth;
      const double ts = cast_target(scene.target(), cam.position, dir);
      if (ts < t && ts <= model.max_depth) f.mask.at(col, row) = 1;
    }
  }
  return f;
}

DepthImage render_depth(const Scene& scene, const CameraPose& cam, int width, int height,
                        const CameraModel& model) {
  return render_frame(scene, cam, width, height, model).depth;
}

MaskImage render_mask(const Scene& scene, const CameraPose& cam, int width, int height,
                      const CameraModel& model) {
  return render_frame(scene, cam, width, height, model).mask;
}

std::array<double, kMaskFeatureDim> MaskFeature::to_vector() const {
  std::array<double, kMaskFeatureDim> v{};
  v[0] = x_c;
  v[1] = y_c;
  v[2] = r;
  v[3] = alpha;
  std::copy(m_tilde.begin(), m_tilde.end(), v.begin() + 4);
  v[kMaskFeatureDim - 1] = visible ? 1.0 : 0.0;
  return v;
}

MaskFeature mask_features(const MaskImage& mask) {
  MaskFeature f;
  if (mask.width < 1 || mask.height < 1) return f;
  double sx = 0.0, sy = 0.0;
  std::size_t count = 0;
  std::array<double, kMaskGrid * kMaskGrid> sums{};
  std::array<int, kMaskGrid * kMaskGrid> cells{};
  for (int row = 0; row < mask.height; ++row) {
    const int by = row * kMaskGrid / mask.height;
    for (int col = 0; col < mask.width; ++col) {
      const int bx = col * kMaskGrid / mask.width;
      const std::size_t k = static_cast<std::size_t>(by) * kMaskGrid + bx;
      ++cells[k];
      if (mask.at(col, row) == 0) continue;
      sums[k] += 1.0;
      sx += pixel_x(col, mask.width);
      sy += pixel_y(row, mask.height);
      ++count;
    }
  }
  if (count == 0) return f;
  f.visible = true;
  f.x_c = sx / static_cast<double>(count);
  f.y_c = sy / static_cast<double>(count);
  f.r = std::sqrt(f.x_c * f.x_c + f.y_c * f.y_c);
  f.alpha = std::atan2(f.y_c, f.x_c);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    f.m_tilde[k] = cells[k] > 0 ? sums[k] / cells[k] : 0.0;
  }
  return f;
}

CropWindow center_window(int in_w, int in_h, int out_w, int out_h) {
  if (out_w > in_w || out_h > in_h || out_w < 1 || out_h < 1) {
    throw CropError("crop output larger than input");
  }
  return {(in_w - out_w) / 2, (in_h - out_h) / 2, out_w, out_h};
}

CropWindow random_window(int in_w, int in_h, int out_w, int out_h, Rng& rng) {
  if (out_w > in_w || out_h > in_h || out_w < 1 || out_h < 1) {
    throw CropError("crop output larger than input");
  }
  const int x0 = rng.uniform_int(0, in_w - out_w);
  const int y0 = rng.uniform_int(0, in_h - out_h);
  return {x0, y0, out_w, out_h};
}

}  // namespace egosearch
