#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/types.hpp"

#include <cstddef>
#include <span>

namespace selfnerf {

struct EncodingConfig {
  int pos_frequencies = 10;
  int dir_frequencies = 4;
  bool include_input = true;

  void validate() const;
  int pos_dim() const;
  int dir_dim() const;
};

/// Gaussian approximation of a conical frustum (diagonal covariance).
struct FrustumGaussian {
  Vec3 mean = Vec3::Zero();
  Vec3 variance = Vec3::Zero();
};

/// Feature length for `frequencies` bands over a 3-vector.
constexpr int encoded_size(int frequencies, bool include_input) {
  return 6 * frequencies + (include_input ? 3 : 0);
}

/// Feature layout: [x0 x1 x2]? then, for each band k and axis a, the pair
/// (sin(2^k x_a), cos(2^k x_a)).
constexpr std::size_t encoding_index(int band, int axis, bool cosine, bool include_input) {
  return (include_input ? 3 : 0) + 2 * (3 * std::size_t(band) + axis) + (cosine ? 1 : 0);
}

void positional_encode(const Vec3 &x, int frequencies, bool include_input, std::span<Real> out);
VecX positional_encode(const Vec3 &x, int frequencies, bool include_input);

/// Moments of the cone segment t in [t0, t1] whose radius grows as
/// ray.pixel_radius * t. Throws std::domain_error unless t0 < t1.
FrustumGaussian frustum_gaussian(const Ray &ray, Real t0, Real t1);

/// Expected sin/cos of each band under the Gaussian:
/// E[sin(2^k x)] = sin(2^k mu) exp(-4^k var / 2). The optional raw input slot
/// carries the mean.
void integrated_positional_encode(const FrustumGaussian &g, int frequencies, bool include_input,
                                  std::span<Real> out);
VecX integrated_positional_encode(const FrustumGaussian &g, int frequencies, bool include_input);

} // namespace selfnerf
