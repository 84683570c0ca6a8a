#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/encoding.hpp"
#include "selfnerf/field.hpp"
#include "selfnerf/image.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace selfnerf {

struct RenderSettings {
  int samples = 64;
  /// Constant colour behind the volume, applied to the radiance composite only.
  Real background = 1.0;
  /// Accumulated opacity below which a ray reports no surface.
  Real min_opacity = 0.5;
};

struct ConeRaySamples {
  Ray ray;
  Real near = 0.0;
  Real far = 0.0;
  std::vector<Real> t;     // strictly increasing sample distances
  std::vector<Real> delta; // t[i+1] - t[i]; the last interval ends at far
  std::vector<FrustumGaussian> frustums;
  std::vector<FieldOutput> outputs; // filled by the field evaluation

  std::size_t size() const { return t.size(); }
};

struct RenderedRay {
  Rgb color_r = Rgb::Zero();
  Rgb color_u = Rgb::Zero();
  Rgb color_p = Rgb::Zero();
  Real variance_u = 0.0;
  Real depth = 0.0;
  bool has_surface = false;
  Real opacity = 0.0; // sum of radiance weights

  std::vector<Real> alphas;
  std::vector<Real> transmittance;
  std::vector<Real> weights;
  std::vector<Real> alphas_u;
  std::vector<Real> transmittance_u;
  std::vector<Real> weights_u;
};

/// One draw per equal-width stratum of [near, far]; `seed == nullopt` places
/// samples at stratum centres. Throws std::domain_error for N < 2 or near >= far.
ConeRaySamples sample_stratified(const Ray &ray, Real near, Real far, int samples,
                                 std::optional<std::uint64_t> seed);

struct CompositeWeights {
  std::vector<Real> alpha;
  std::vector<Real> transmittance;
  std::vector<Real> weight;
};

/// alpha_i = 1 - exp(-density_i delta_i), T_i = exp(-sum_{j<i} density_j delta_j), w_i = T_i alpha_i.
CompositeWeights compositing_weights(std::span<const Real> density, std::span<const Real> delta);

struct RadianceComposite {
  Rgb color = Rgb::Zero();
  CompositeWeights weights;
};

RadianceComposite composite_radiance(const ConeRaySamples &samples, Real background = 0.0);
Rgb composite_uncertain(const ConeRaySamples &samples);
Real composite_variance(const ConeRaySamples &samples);

struct DepthComposite {
  Real depth = 0.0;
  bool has_surface = false;
  Real opacity = 0.0;
};
/// Opacity-normalised expected ray distance. Rays whose opacity is below
/// `min_opacity` (or exactly zero) report depth 0 and no surface.
DepthComposite composite_depth(const ConeRaySamples &samples, Real min_opacity = 1e-10);

/// Runs every composite over samples whose `outputs` are populated.
RenderedRay composite_all(const ConeRaySamples &samples, const RenderSettings &settings);

/// Fills samples.outputs from the field.
void evaluate_samples(const FieldParams &field, ConeRaySamples &samples, WarpClass omega, int phi);

RenderedRay render_ray(const FieldParams &field, const Ray &ray, Real near, Real far, WarpClass omega, int phi,
                       const RenderSettings &settings, std::optional<std::uint64_t> seed);

RenderedRay render_pixel(const FieldParams &field, const Camera &camera, const Vec2 &pixel, WarpClass omega,
                         int phi, const RenderSettings &settings, std::optional<std::uint64_t> seed);

/// Upstream gradients on one rendered ray.
struct RenderedRayGrad {
  Rgb d_color_r = Rgb::Zero();
  Rgb d_color_u = Rgb::Zero();
  Real d_variance = 0.0;
  Real d_depth = 0.0;
  std::vector<Real> d_alpha; // on the radiance alphas; empty = zero
};

/// Reverse pass of composite_all: writes per-sample gradients into columns
/// [col0, col0 + N) of `d_out` (accumulating).
void composite_backward(const ConeRaySamples &samples, const RenderedRay &rendered, const RenderedRayGrad &upstream,
                        Real background, FieldBatch &d_out, Eigen::Index col0);

struct RenderedImage {
  Image color; // radiance composite only
  DepthMap depth;
  std::vector<Real> opacity;
};

/// Evaluation render: stratum centres, radiance colour C^r, depth with the
/// no-surface flag from settings.min_opacity.
RenderedImage render_image(const FieldParams &field, const Camera &camera, const RenderSettings &settings,
                           int threads = 1);

/// Builds IPE / PE feature columns for every sample of every ray.
void encode_samples(const EncodingConfig &enc, std::span<const ConeRaySamples> rays, MatX &pos_feat,
                    MatX &dir_feat);

} // namespace selfnerf
