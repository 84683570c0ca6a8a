#include "selfnerf/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnerf {

void EncodingConfig::validate() const {
  if (pos_frequencies < 1 || dir_frequencies < 1)
    throw std::domain_error("encoding: frequency counts must be >= 1");
}

int EncodingConfig::pos_dim() const { return encoded_size(pos_frequencies, include_input); }
int EncodingConfig::dir_dim() const { return encoded_size(dir_frequencies, include_input); }

void positional_encode(const Vec3 &x, int frequencies, bool include_input, std::span<Real> out) {
  if (out.size() != std::size_t(encoded_size(frequencies, include_input)))
    throw std::invalid_argument("positional_encode: output span has the wrong length");
  if (include_input)
    for (int a = 0; a < 3; ++a) out[a] = x[a];
  Real scale = 1.0;
  for (int k = 0; k < frequencies; ++k, scale *= 2.0) {
    for (int a = 0; a < 3; ++a) {
      const Real arg = scale * x[a];
      out[encoding_index(k, a, false, include_input)] = std::sin(arg);
      out[encoding_index(k, a, true, include_input)] = std::cos(arg);
    }
  }
}

VecX positional_encode(const Vec3 &x, int frequencies, bool include_input) {
  VecX out(encoded_size(frequencies, include_input));
  positional_encode(x, frequencies, include_input, std::span<Real>(out.data(), out.size()));
  return out;
}

FrustumGaussian frustum_gaussian(const Ray &ray, Real t0, Real t1) {
  if (!(t1 > t0)) throw std::domain_error("frustum_gaussian: requires t0 < t1");
  const Real mu = 0.5 * (t0 + t1);
  const Real hw = 0.5 * (t1 - t0);
  const Real mu2 = mu * mu;
  const Real hw2 = hw * hw;
  const Real hw4 = hw2 * hw2;
  const Real denom = 3.0 * mu2 + hw2;

  // Stable reparameterisation of the exact cone-segment moments.
  const Real t_mean = mu + 2.0 * mu * hw2 / denom;
  const Real t_var = hw2 / 3.0 - (4.0 / 15.0) * (hw4 * (12.0 * mu2 - hw2)) / (denom * denom);
  const Real r_var =
      ray.pixel_radius * ray.pixel_radius * (mu2 / 4.0 + (5.0 / 12.0) * hw2 - (4.0 / 15.0) * hw4 / denom);

  const Vec3 &d = ray.direction;
  const Vec3 d2 = d.cwiseProduct(d);
  const Real norm2 = std::max(d.squaredNorm(), 1e-300);

  FrustumGaussian g;
  g.mean = ray.origin + t_mean * d;
  g.variance = t_var * d2 + r_var * (Vec3::Ones() - d2 / norm2);
  return g;
}

void integrated_positional_encode(const FrustumGaussian &g, int frequencies, bool include_input,
                                  std::span<Real> out) {
  if (out.size() != std::size_t(encoded_size(frequencies, include_input)))
    throw std::invalid_argument("integrated_positional_encode: output span has the wrong length");
  if (include_input)
    for (int a = 0; a < 3; ++a) out[a] = g.mean[a];
  Real scale = 1.0;
  for (int k = 0; k < frequencies; ++k, scale *= 2.0) {
    for (int a = 0; a < 3; ++a) {
      const Real arg = scale * g.mean[a];
      const Real damp = std::exp(-0.5 * scale * scale * g.variance[a]);
      out[encoding_index(k, a, false, include_input)] = std::sin(arg) * damp;
      out[encoding_index(k, a, true, include_input)] = std::cos(arg) * damp;
    }
  }
}

VecX integrated_positional_encode(const FrustumGaussian &g, int frequencies, bool include_input) {
  VecX out(encoded_size(frequencies, include_input));
  integrated_positional_encode(g, frequencies, include_input, std::span<Real>(out.data(), out.size()));
  return out;
}

} // namespace selfnerf
