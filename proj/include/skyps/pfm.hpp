#pragma once

#include <filesystem>
#include <vector>

#include "skyps/types.hpp"

namespace skyps {

/// Portable FloatMap pixels, top row first, channels interleaved.
struct PfmImage {
  int width = 0;
  int height = 0;
  int channels = 3;  // 3 for "PF", 1 for "Pf"
  std::vector<float> data;
};

/// Reads "PF" (RGB) and "Pf" (grey) files of either byte order.
PfmImage read_pfm(const std::filesystem::path& path);

/// Writes little-endian ("-1.0" scale line), rows bottom-to-top.
void write_pfm(const std::filesystem::path& path, const PfmImage& image);

PfmImage to_pfm(const RgbImage& image);
RgbImage rgb_from_pfm(const PfmImage& pfm);

/// Normals stored as raw (x,y,z); invalid pixels are written as (0,0,0).
PfmImage to_pfm(const NormalMap& normals);
NormalMap normals_from_pfm(const PfmImage& pfm);

}  // namespace skyps
