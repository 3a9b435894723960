#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "egosearch/geometry.hpp"
#include "egosearch/rng.hpp"
#include "egosearch/scene.hpp"

namespace egosearch {

// Row-major image, row 0 at the top.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  const T& at(int col, int row) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  bool operator==(const Image&) const = default;
};

using DepthImage = Image<double>;
using MaskImage = Image<std::uint8_t>;

struct CameraPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;    // world yaw (body yaw + camera yaw joint)
  double pitch = 0.0;  // positive looks up
};

struct CameraModel {
  double hfov = deg2rad(90.0);
  double max_depth = 5.0;
};

// Unit ray direction through the centre of pixel (col, row).
Vec3 pixel_ray(const CameraPose& cam, const CameraModel& model, int width, int height, int col,
               int row);

// Nearest hit distance against solid geometry along a unit ray (infinity if none).
double cast_solid(const Scene& scene, const Vec3& origin, const Vec3& dir);

// Nearest entry distance into the target sphere (infinity if none).
double cast_target(const TargetObject& target, const Vec3& origin, const Vec3& dir);

struct Frame {
  DepthImage depth;
  MaskImage mask;
};

// Renders depth and mask in one pass over the pixel rays.
Frame render_frame(const Scene& scene, const CameraPose& cam, int width, int height,
                   const CameraModel& model = {});
DepthImage render_depth(const Scene& scene, const CameraPose& cam, int width, int height,
                        const CameraModel& model = {});
MaskImage render_mask(const Scene& scene, const CameraPose& cam, int width, int height,
                      const CameraModel& model = {});

inline constexpr int kMaskGrid = 5;
// x_c, y_c, r, alpha, 5x5 pooled mask, visible flag.
inline constexpr int kMaskFeatureDim = 4 + kMaskGrid * kMaskGrid + 1;

struct MaskFeature {
  double x_c = 0.0;
  double y_c = 0.0;
  double r = 0.0;
  double alpha = 0.0;
  std::array<double, kMaskGrid * kMaskGrid> m_tilde{};  // row-major, top row first
  bool visible = false;

  std::array<double, kMaskFeatureDim> to_vector() const;
  bool operator==(const MaskFeature&) const = default;
};

// Centre-origin normalised coordinate of a pixel centre (x right, y up).
inline double pixel_x(int col, int width) {
  return static_cast<double>(2 * col + 1 - width) / width;
}
inline double pixel_y(int row, int height) {
  return static_cast<double>(height - 2 * row - 1) / height;
}

MaskFeature mask_features(const MaskImage& mask);

class CropError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CropMode { None, Center, Random };

struct CropWindow {
  int x0 = 0, y0 = 0, width = 0, height = 0;
};

CropWindow center_window(int in_w, int in_h, int out_w, int out_h);
CropWindow random_window(int in_w, int in_h, int out_w, int out_h, Rng& rng);

template <typename T>
Image<T> crop(const Image<T>& img, const CropWindow& win) {
  if (win.x0 < 0 || win.y0 < 0 || win.x0 + win.width > img.width ||
      win.y0 + win.height > img.height) {
    throw CropError("crop window exceeds image");
  }
  Image<T> out(win.width, win.height);
  for (int r = 0; r < win.height; ++r) {
    for (int c = 0; c < win.width; ++c) out.at(c, r) = img.at(win.x0 + c, win.y0 + r);
  }
  return out;
}

// Crop by mode; `rng` is only consumed by CropMode::Random.
template <typename T>
Image<T> crop(const Image<T>& img, CropMode mode, int out_w, int out_h, Rng* rng = nullptr) {
  switch (mode) {
    case CropMode::None:
      return img;
    case CropMode::Center:
      return crop(img, center_window(img.width, img.height, out_w, out_h));
    case CropMode::Random:
      if (rng == nullptr) throw CropError("random crop needs an rng");
      return crop(img, random_window(img.width, img.height, out_w, out_h, *rng));
  }
  return img;
}

}  // namespace egosearch
