#include "selfnerf/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

namespace selfnerf {
namespace {

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path &path, const char *mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  return f;
}

void write_png_bytes(const std::filesystem::path &path, const std::vector<std::uint8_t> &bytes, int width,
                     int height, int color_type, int channels) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: cannot allocate writer for '" + path.string() + "'");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: failed writing '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + std::size_t(y) * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_le32(std::ofstream &out, std::uint32_t v) {
  const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_f32(std::ofstream &out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_le32(out, bits);
}

std::uint32_t read_le32(std::ifstream &in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  if (!in) throw std::runtime_error("depth raw: truncated file");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

float read_f32(std::ifstream &in) {
  const std::uint32_t bits = read_le32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

} // namespace

std::uint8_t quantize(Real v) {
  const Real c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void write_png(const std::filesystem::path &path, const Image &image) {
  std::vector<std::uint8_t> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), quantize);
  write_png_bytes(path, bytes, image.width, image.height, PNG_COLOR_TYPE_RGB, 3);
}

void write_png_mask(const std::filesystem::path &path, const Mask &mask, int width, int height) {
  std::vector<std::uint8_t> bytes(mask.size());
  std::transform(mask.begin(), mask.end(), bytes.begin(), [](std::uint8_t m) { return m ? 255 : 0; });
  write_png_bytes(path, bytes, width, height, PNG_COLOR_TYPE_GRAY, 1);
}

void write_ppm(const std::filesystem::path &path, const Image &image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "'");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (Real v : image.data) out.put(static_cast<char>(quantize(v)));
}

LoadedPng read_png(const std::filesystem::path &path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: cannot allocate reader for '" + path.string() + "'");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: '" + path.string() + "' is not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int color_type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  std::vector<std::uint8_t> bytes(std::size_t(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = bytes.data() + std::size_t(y) * width * channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  LoadedPng result;
  result.rgb = Image(width, height);
  if (channels == 4) result.alpha.resize(std::size_t(width) * height);
  for (std::size_t i = 0; i < std::size_t(width) * height; ++i) {
    for (int c = 0; c < 3; ++c) result.rgb.data[3 * i + c] = bytes[i * channels + c] / 255.0;
    if (channels == 4) result.alpha[i] = bytes[i * channels + 3] / 255.0;
  }
  return result;
}

void write_depth_raw(const std::filesystem::path &path, const DepthMap &depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "'");
  out.write("SNDEPTH1", 8);
  write_le32(out, static_cast<std::uint32_t>(depth.width));
  write_le32(out, static_cast<std::uint32_t>(depth.height));
  write_f32(out, static_cast<float>(depth.near));
  write_f32(out, static_cast<float>(depth.far));
  for (std::size_t i = 0; i < depth.depth.size(); ++i)
    write_f32(out, depth.valid[i] ? static_cast<float>(depth.depth[i]) : std::numeric_limits<float>::quiet_NaN());
}

DepthMap read_depth_raw(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "SNDEPTH1", 8) != 0)
    throw std::runtime_error("'" + path.string() + "' is not a depth raw file");
  const int w = static_cast<int>(read_le32(in));
  const int h = static_cast<int>(read_le32(in));
  const float n = read_f32(in);
  const float f = read_f32(in);
  DepthMap d(w, h, n, f);
  for (std::size_t i = 0; i < d.depth.size(); ++i) {
    const float v = read_f32(in);
    d.valid[i] = std::isnan(v) ? 0 : 1;
    d.depth[i] = std::isnan(v) ? 0.0 : v;
  }
  return d;
}

} // namespace selfnerf
