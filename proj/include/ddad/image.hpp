#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddad/errors.hpp"

namespace ddad {

// Single-channel image on a square grid, values in [0,1]. The unit every
// network consumes and produces.
struct Image {
  int side = 0;
  std::vector<float> pix;  // side*side, row-major

  Image() = default;
  Image(int side_, float fill = 0.f)
      : side(side_), pix(static_cast<size_t>(side_) * side_, fill) {}

  float& at(int y, int x) { return pix[static_cast<size_t>(y) * side + x]; }
  float at(int y, int x) const { return pix[static_cast<size_t>(y) * side + x]; }
  size_t size() const { return pix.size(); }
};

// Raw decoded raster before grayscale conversion / resizing.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;           // 1 or 3
  std::vector<uint8_t> data;  // h*w*channels
};

RasterImage decode_image_file(const std::filesystem::path& path);

// Grayscale luminance (BT.601 for RGB inputs), bilinear resize to
// side x side, /255 scaling into [0,1].
Image load_image(const std::filesystem::path& path, int side);

// Bilinear resample of a [0,1] grayscale grid (half-pixel centers).
std::vector<float> resize_bilinear(const std::vector<float>& src, int sw,
                                   int sh, int dw, int dh);

// 8-bit grayscale PNG. Fixed encoder settings, byte-stable across runs.
void write_png_gray8(const std::filesystem::path& path,
                     const std::vector<uint8_t>& pix, int width, int height);

// 16-bit grayscale PNG used for score-map export.
void write_png_gray16(const std::filesystem::path& path,
                      const std::vector<uint16_t>& pix, int width, int height);

inline uint8_t to_byte(float v) {
  float x = v * 255.0f + 0.5f;
  if (x < 0.f) x = 0.f;
  if (x > 255.f) x = 255.f;
  return static_cast<uint8_t>(x);
}

void write_image_png(const std::filesystem::path& path, const Image& img);

}  // namespace ddad
