#pragma once

#include "selfnerf/field.hpp"
#include "selfnerf/rng.hpp"

#include <cmath>
#include <filesystem>
#include <string>

namespace selfnerf::testing {

inline FieldConfig tiny_field(int num_images = 3) {
  FieldConfig cfg;
  cfg.encoding.pos_frequencies = 3;
  cfg.encoding.dir_frequencies = 2;
  cfg.trunk_depth = 2;
  cfg.trunk_width = 8;
  cfg.head_width = 8;
  cfg.dim_omega = 4;
  cfg.dim_phi = 4;
  cfg.num_images = num_images;
  return cfg;
}

/// Field whose density and colour are the given constants everywhere.
/// Uncertainty outputs are driven close to zero.
inline FieldParams constant_field(Real sigma, const Rgb &color, FieldConfig cfg = tiny_field()) {
  FieldParams p(cfg);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  p.values[p.density_bias_offset()] = sigma > 30 ? sigma : std::log(std::expm1(sigma));
  const Mlp &head = p.color_head();
  const std::size_t last = head.layer_count() - 1;
  for (int c = 0; c < 3; ++c) p.values[head.bias_offset(last) + c] = std::log(color[c] / (1.0 - color[c]));
  const Mlp &u = p.uncertainty_head();
  for (int c = 0; c < 5; ++c) p.values[u.bias_offset(u.layer_count() - 1) + c] = -40.0;
  return p;
}

inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("selfnerf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Real rel_err(Real a, Real b, Real floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace selfnerf::testing
