#pragma once

#include "selfnerf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace selfnerf {

/// Row-major RGB image with linear values, nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Real> data; // 3 * width * height

  Image() = default;
  Image(int w, int h, Real fill = 0.0) : width(w), height(h), data(3 * std::size_t(w) * h, fill) {}

  std::size_t pixel_count() const { return std::size_t(width) * height; }
  std::size_t index(int x, int y) const { return std::size_t(y) * width + x; }

  Rgb at(int x, int y) const {
    const std::size_t i = 3 * index(x, y);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, const Rgb &c) {
    const std::size_t i = 3 * index(x, y);
    data[i] = c[0];
    data[i + 1] = c[1];
    data[i + 2] = c[2];
  }
  bool same_shape(const Image &other) const { return width == other.width && height == other.height; }
};

using Mask = std::vector<std::uint8_t>;

/// Per-pixel ray-distance depth with validity flags.
struct DepthMap {
  int width = 0;
  int height = 0;
  Real near = 0.0;
  Real far = 0.0;
  std::vector<Real> depth;
  Mask valid;

  DepthMap() = default;
  DepthMap(int w, int h, Real n, Real f)
      : width(w), height(h), near(n), far(f), depth(std::size_t(w) * h, 0.0), valid(std::size_t(w) * h, 0) {}
  std::size_t index(int x, int y) const { return std::size_t(y) * width + x; }
};

/// 8-bit quantisation used for every image write-out.
std::uint8_t quantize(Real v);

void write_png(const std::filesystem::path &path, const Image &image);
void write_png_mask(const std::filesystem::path &path, const Mask &mask, int width, int height);
void write_ppm(const std::filesystem::path &path, const Image &image);

struct LoadedPng {
  Image rgb;
  std::vector<Real> alpha; // empty when the file has no alpha channel
};
/// Reads 8-bit or 16-bit gray/RGB(A) PNGs. Throws std::runtime_error naming the file.
LoadedPng read_png(const std::filesystem::path &path);

/// Depth raw format, little-endian:
///   char[8] "SNDEPTH1", uint32 width, uint32 height, float32 near, float32 far,
///   then width*height float32 values in row-major order; invalid pixels are NaN.
void write_depth_raw(const std::filesystem::path &path, const DepthMap &depth);
DepthMap read_depth_raw(const std::filesystem::path &path);

} // namespace selfnerf
