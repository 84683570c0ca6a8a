#include "selfnerf/renderer.hpp"

#include "selfnerf/parallel.hpp"
#include "selfnerf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnerf {
namespace {

// dL/ds_k for s = density * delta given dL/dw_i, where w_i = T_i alpha_i:
//   dL/ds_k = g_k T_k (1 - alpha_k) - sum_{i>k} g_i w_i
void weights_backward(const CompositeWeights &cw, std::span<const Real> g_w, std::span<Real> g_s) {
  const std::size_t n = cw.weight.size();
  Real suffix = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    g_s[k] += g_w[k] * cw.transmittance[k] * (1.0 - cw.alpha[k]) - suffix;
    suffix += g_w[k] * cw.weight[k];
  }
}

std::vector<Real> gather(const ConeRaySamples &s, Real FieldOutput::*member) {
  std::vector<Real> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s.outputs[i].*member;
  return out;
}

void require_outputs(const ConeRaySamples &s) {
  if (s.outputs.size() != s.size()) throw std::logic_error("composite: samples carry no field outputs");
}

} // namespace

ConeRaySamples sample_stratified(const Ray &ray, Real near, Real far, int samples,
                                 std::optional<std::uint64_t> seed) {
  if (samples < 2) throw std::domain_error("sample_stratified: need at least 2 samples");
  if (!(near < far)) throw std::domain_error("sample_stratified: near must be < far");
  ConeRaySamples s;
  s.ray = ray;
  s.near = near;
  s.far = far;
  s.t.resize(samples);
  s.delta.resize(samples);
  s.frustums.resize(samples);

  const Real bin = (far - near) / samples;
  std::optional<Rng> rng;
  if (seed) rng.emplace(*seed);
  for (int i = 0; i < samples; ++i) {
    const Real u = rng ? rng->uniform() : 0.5;
    s.t[i] = near + (i + u) * bin;
  }
  for (int i = 0; i < samples; ++i) {
    const Real t1 = i + 1 < samples ? s.t[i + 1] : far;
    s.delta[i] = t1 - s.t[i];
    s.frustums[i] = frustum_gaussian(ray, s.t[i], t1);
  }
  return s;
}

CompositeWeights compositing_weights(std::span<const Real> density, std::span<const Real> delta) {
  const std::size_t n = density.size();
  CompositeWeights cw;
  cw.alpha.resize(n);
  cw.transmittance.resize(n);
  cw.weight.resize(n);
  Real optical_depth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real s = density[i] * delta[i];
    cw.transmittance[i] = std::exp(-optical_depth);
    cw.alpha[i] = -std::expm1(-s);
    cw.weight[i] = cw.transmittance[i] * cw.alpha[i];
    optical_depth += s;
  }
  return cw;
}

RadianceComposite composite_radiance(const ConeRaySamples &samples, Real background) {
  require_outputs(samples);
  const auto sigma = gather(samples, &FieldOutput::sigma);
  RadianceComposite rc;
  rc.weights = compositing_weights(sigma, samples.delta);
  Real acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rc.color += rc.weights.weight[i] * samples.outputs[i].color;
    acc += rc.weights.weight[i];
  }
  rc.color += Rgb::Constant(background * (1.0 - acc));
  return rc;
}

Rgb composite_uncertain(const ConeRaySamples &samples) {
  require_outputs(samples);
  const auto cw = compositing_weights(gather(samples, &FieldOutput::sigma_u), samples.delta);
  Rgb c = Rgb::Zero();
  for (std::size_t i = 0; i < samples.size(); ++i) c += cw.weight[i] * samples.outputs[i].color_u;
  return c;
}

Real composite_variance(const ConeRaySamples &samples) {
  require_outputs(samples);
  const auto cw = compositing_weights(gather(samples, &FieldOutput::sigma_u), samples.delta);
  Real v = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) v += cw.weight[i] * samples.outputs[i].mu_u;
  return v;
}

DepthComposite composite_depth(const ConeRaySamples &samples, Real min_opacity) {
  require_outputs(samples);
  const auto cw = compositing_weights(gather(samples, &FieldOutput::sigma), samples.delta);
  DepthComposite d;
  Real weighted = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    d.opacity += cw.weight[i];
    weighted += cw.weight[i] * samples.t[i];
  }
  if (d.opacity > 0.0 && d.opacity >= min_opacity) {
    d.depth = weighted / d.opacity;
    d.has_surface = true;
  }
  return d;
}

RenderedRay composite_all(const ConeRaySamples &samples, const RenderSettings &settings) {
  require_outputs(samples);
  const std::size_t n = samples.size();
  RenderedRay r;
  const auto rad = compositing_weights(gather(samples, &FieldOutput::sigma), samples.delta);
  const auto unc = compositing_weights(gather(samples, &FieldOutput::sigma_u), samples.delta);
  Real weighted_t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const FieldOutput &o = samples.outputs[i];
    r.color_r += rad.weight[i] * o.color;
    r.opacity += rad.weight[i];
    weighted_t += rad.weight[i] * samples.t[i];
    r.color_u += unc.weight[i] * o.color_u;
    r.variance_u += unc.weight[i] * o.mu_u;
  }
  r.color_r += Rgb::Constant(settings.background * (1.0 - r.opacity));
  r.color_p = r.color_r + r.color_u;
  if (r.opacity > 0.0 && r.opacity >= settings.min_opacity) {
    r.depth = weighted_t / r.opacity;
    r.has_surface = true;
  }
  r.alphas = rad.alpha;
  r.transmittance = rad.transmittance;
  r.weights = rad.weight;
  r.alphas_u = unc.alpha;
  r.transmittance_u = unc.transmittance;
  r.weights_u = unc.weight;
  return r;
}

void encode_samples(const EncodingConfig &enc, std::span<const ConeRaySamples> rays, MatX &pos_feat,
                    MatX &dir_feat) {
  Eigen::Index total = 0;
  for (const auto &r : rays) total += Eigen::Index(r.size());
  pos_feat.resize(enc.pos_dim(), total);
  dir_feat.resize(enc.dir_dim(), total);
  Eigen::Index col = 0;
  for (const auto &r : rays) {
    VecX dir = positional_encode(r.ray.direction, enc.dir_frequencies, enc.include_input);
    for (std::size_t i = 0; i < r.size(); ++i, ++col) {
      integrated_positional_encode(r.frustums[i], enc.pos_frequencies, enc.include_input,
                                   std::span<Real>(pos_feat.col(col).data(), std::size_t(pos_feat.rows())));
      dir_feat.col(col) = dir;
    }
  }
}

void evaluate_samples(const FieldParams &field, ConeRaySamples &samples, WarpClass omega, int phi) {
  MatX pos, dir;
  encode_samples(field.config().encoding, {&samples, 1}, pos, dir);
  const std::vector<int> omega_ids(samples.size(), static_cast<int>(omega));
  const std::vector<int> phi_ids(samples.size(), phi);
  const FieldBatch out = evaluate_batch(field, pos, dir, omega_ids, phi_ids, nullptr);
  samples.outputs.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples.outputs[i] = out.at(Eigen::Index(i));
}

RenderedRay render_ray(const FieldParams &field, const Ray &ray, Real near, Real far, WarpClass omega, int phi,
                       const RenderSettings &settings, std::optional<std::uint64_t> seed) {
  ConeRaySamples samples = sample_stratified(ray, near, far, settings.samples, seed);
  evaluate_samples(field, samples, omega, phi);
  return composite_all(samples, settings);
}

RenderedRay render_pixel(const FieldParams &field, const Camera &camera, const Vec2 &pixel, WarpClass omega,
                         int phi, const RenderSettings &settings, std::optional<std::uint64_t> seed) {
  return render_ray(field, generate_ray(camera, pixel.x(), pixel.y()), camera.near, camera.far, omega, phi, settings,
                    seed);
}

void composite_backward(const ConeRaySamples &samples, const RenderedRay &r, const RenderedRayGrad &up,
                        Real background, FieldBatch &d_out, Eigen::Index col0) {
  require_outputs(samples);
  const std::size_t n = samples.size();
  std::vector<Real> g_w(n, 0.0), g_s(n, 0.0), g_wu(n, 0.0), g_su(n, 0.0);
  const CompositeWeights rad{r.alphas, r.transmittance, r.weights};
  const CompositeWeights unc{r.alphas_u, r.transmittance_u, r.weights_u};

  for (std::size_t i = 0; i < n; ++i) {
    const FieldOutput &o = samples.outputs[i];
    g_w[i] = up.d_color_r.dot(o.color - Rgb::Constant(background));
    if (r.has_surface && up.d_depth != 0.0) g_w[i] += up.d_depth * (samples.t[i] - r.depth) / r.opacity;
    g_wu[i] = up.d_color_u.dot(o.color_u) + up.d_variance * o.mu_u;
  }
  weights_backward(rad, g_w, g_s);
  weights_backward(unc, g_wu, g_su);
  if (!up.d_alpha.empty())
    for (std::size_t i = 0; i < n; ++i) g_s[i] += up.d_alpha[i] * (1.0 - r.alphas[i]);

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index c = col0 + Eigen::Index(i);
    d_out.sigma[c] += g_s[i] * samples.delta[i];
    d_out.color.col(c) += r.weights[i] * up.d_color_r;
    d_out.sigma_u[c] += g_su[i] * samples.delta[i];
    d_out.color_u.col(c) += r.weights_u[i] * up.d_color_u;
    d_out.mu_u[c] += r.weights_u[i] * up.d_variance;
  }
}

RenderedImage render_image(const FieldParams &field, const Camera &camera, const RenderSettings &settings,
                           int threads) {
  camera.validate();
  RenderedImage out;
  out.color = Image(camera.width, camera.height);
  out.depth = DepthMap(camera.width, camera.height, camera.near, camera.far);
  out.opacity.assign(out.color.pixel_count(), 0.0);

  parallel_chunks(std::size_t(camera.height), threads, [&](std::size_t y0, std::size_t y1) {
    std::vector<ConeRaySamples> row(camera.width);
    for (std::size_t y = y0; y < y1; ++y) {
      for (int x = 0; x < camera.width; ++x)
        row[x] = sample_stratified(pixel_ray(camera, x, int(y)), camera.near, camera.far, settings.samples,
                                   std::nullopt);
      MatX pos, dir;
      encode_samples(field.config().encoding, row, pos, dir);
      const std::vector<int> zeros(pos.cols(), 0);
      const FieldBatch batch = evaluate_batch(field, pos, dir, zeros, zeros, nullptr);
      Eigen::Index col = 0;
      for (int x = 0; x < camera.width; ++x) {
        ConeRaySamples &s = row[x];
        s.outputs.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) s.outputs[i] = batch.at(col++);
        const RenderedRay r = composite_all(s, settings);
        out.color.set(x, int(y), r.color_r);
        const std::size_t idx = out.depth.index(x, int(y));
        out.depth.depth[idx] = r.depth;
        out.depth.valid[idx] = r.has_surface ? 1 : 0;
        out.opacity[idx] = r.opacity;
      }
    }
  });
  return out;
}

} // namespace selfnerf
