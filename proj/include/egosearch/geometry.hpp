#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace egosearch {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }

// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Smallest signed difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  return d;
}

inline Vec2 rotate(const Vec2& v, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// Oriented box: rotated about +z by `yaw` around its center.
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Ones();
  double yaw = 0.0;

  double z_min() const { return center.z() - half.z(); }
  double z_max() const { return center.z() + half.z(); }

  bool operator==(const Box&) const = default;
};

// Plan-view distance from point p to the footprint of `b` (0 when inside).
double footprint_distance(const Box& b, const Vec2& p);

// Closest footprint point of `b` to p, in world coordinates.
Vec2 footprint_closest_point(const Box& b, const Vec2& p);

// Plan-view distance from segment [a, c] to the footprint of `b`.
double footprint_segment_distance(const Box& b, const Vec2& a, const Vec2& c);

// True when p lies inside `b` (3D, closed).
bool box_contains(const Box& b, const Vec3& p, double margin = 0.0);

}  // namespace egosearch
