#include "egosearch/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace egosearch {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const DepthImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (double v : img.pixels) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    const char bytes[2] = {static_cast<char>((q >> 8) & 0xff), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
}

void write_pgm(const std::filesystem::path& path, const MaskImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (std::uint8_t v : img.pixels) out.put(static_cast<char>(v ? 255 : 0));
}

DepthImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw std::runtime_error("not a binary graymap: " + path.string());
  }
  in.get();
  DepthImage img(w, h);
  for (double& v : img.pixels) {
    unsigned q = 0;
    if (maxval > 255) {
      const int hi = in.get(), lo = in.get();
      q = (static_cast<unsigned>(hi) << 8) | static_cast<unsigned>(lo);
    } else {
      q = static_cast<unsigned>(in.get());
    }
    if (!in) throw std::runtime_error("truncated graymap: " + path.string());
    v = static_cast<double>(q) / maxval;
  }
  return img;
}

std::string mask_feature_csv_header() {
  std::ostringstream s;
  s << "x_c,y_c,r,alpha";
  for (int k = 0; k < kMaskGrid * kMaskGrid; ++k) s << ",m" << k;
  s << ",visible";
  return s.str();
}

std::string mask_feature_csv_row(const MaskFeature& f) {
  std::ostringstream s;
  s.precision(17);
  const auto v = f.to_vector();
  for (std::size_t k = 0; k < v.size(); ++k) s << (k ? "," : "") << v[k];
  return s.str();
}

}  // namespace egosearch
