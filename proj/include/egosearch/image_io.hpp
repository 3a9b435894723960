#pragma once

#include <filesystem>
#include <string>

#include "egosearch/sensor.hpp"

namespace egosearch {

// Binary portable graymap. Depth is written with 16-bit samples
// (value * 65535, rounded); masks with 8-bit samples 0/255.
void write_pgm(const std::filesystem::path& path, const DepthImage& img);
void write_pgm(const std::filesystem::path& path, const MaskImage& img);

// Reads a P5 graymap, returning samples normalised to [0,1].
DepthImage read_pgm(const std::filesystem::path& path);

// One delimited-text row for a mask feature vector.
std::string mask_feature_csv_header();
std::string mask_feature_csv_row(const MaskFeature& f);

}  // namespace egosearch
