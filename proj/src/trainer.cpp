#include "selfnerf/trainer.hpp"

#include "selfnerf/parallel.hpp"
#include "selfnerf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfnerf {
namespace {

struct RaySpec {
  Ray ray;
  Real near = 0.0;
  Real far = 0.0;
  RayRole role = RayRole::Seen;
  Rgb target = Rgb::Zero();
  int omega = 0;
  int phi = 0;
};

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<ConeRaySamples> samples;
  std::vector<RenderedRay> rendered;
  FieldCache cache;
  std::vector<Eigen::Index> col0;
  Eigen::Index cols = 0;
};

// Pixel lists for masked views, built once per training run.
struct ViewIndex {
  std::vector<std::size_t> seen;
  std::vector<std::size_t> pseudo;
  std::vector<std::vector<std::uint32_t>> valid_pixels;
};

ViewIndex index_views(const std::vector<TrainingView> &views) {
  ViewIndex idx;
  idx.valid_pixels.resize(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    const TrainingView &tv = views[v];
    if (tv.image.width != tv.camera.width || tv.image.height != tv.camera.height)
      throw std::domain_error("training view " + std::to_string(v) + ": image and camera sizes differ");
    if (!tv.mask.empty() && tv.mask.size() != tv.image.pixel_count())
      throw std::domain_error("training view " + std::to_string(v) + ": mask size mismatch");
    if (tv.role == RayRole::EntropyOnly) throw std::domain_error("training views must be seen or pseudo");
    auto &px = idx.valid_pixels[v];
    for (std::size_t p = 0; p < tv.image.pixel_count(); ++p)
      if (tv.mask.empty() || tv.mask[p]) px.push_back(std::uint32_t(p));
    if (px.empty()) continue;
    (tv.role == RayRole::Seen ? idx.seen : idx.pseudo).push_back(v);
  }
  return idx;
}

RaySpec view_ray(const TrainingView &tv, std::uint32_t pixel) {
  const int x = int(pixel % tv.image.width);
  const int y = int(pixel / tv.image.width);
  return {pixel_ray(tv.camera, x, y), tv.camera.near, tv.camera.far, tv.role, tv.image.at(x, y),
          int(tv.omega), tv.phi};
}

std::vector<RaySpec> sample_batch(const std::vector<TrainingView> &views, const ViewIndex &idx,
                                  const std::vector<Camera> &entropy_poses, const TrainSettings &s, Rng &rng) {
  const int batch = s.batch_rays;
  const int n_entropy =
      entropy_poses.empty() ? 0 : std::min(batch - 1, int(std::lround(batch * s.loss.entropy_ray_fraction)));
  const int supervised = batch - n_entropy;
  const int n_pseudo =
      idx.pseudo.empty() ? 0 : std::min(supervised - 1, int(std::lround(supervised * s.pseudo_ray_fraction)));
  const int n_seen = supervised - n_pseudo;

  std::vector<RaySpec> rays;
  rays.reserve(batch);
  auto draw = [&](const std::vector<std::size_t> &pool) {
    const std::size_t v = pool[rng.index(pool.size())];
    const auto &px = idx.valid_pixels[v];
    rays.push_back(view_ray(views[v], px[rng.index(px.size())]));
  };
  for (int i = 0; i < n_seen; ++i) draw(idx.seen);
  for (int i = 0; i < n_pseudo; ++i) draw(idx.pseudo);
  for (int i = 0; i < n_entropy; ++i) {
    const Camera &cam = entropy_poses[rng.index(entropy_poses.size())];
    const int x = int(rng.index(cam.width));
    const int y = int(rng.index(cam.height));
    rays.push_back({pixel_ray(cam, x, y), cam.near, cam.far, RayRole::EntropyOnly, Rgb::Zero(), 0, 0});
  }
  return rays;
}

} // namespace

void TrainSettings::validate() const {
  if (steps < 0) throw std::domain_error("train.steps must be >= 0");
  if (batch_rays < 1) throw std::domain_error("train.batch_rays must be >= 1");
  if (!(learning_rate >= 0.0) || !(learning_rate_final >= 0.0))
    throw std::domain_error("train.learning_rate must be >= 0");
  if (!(pseudo_ray_fraction >= 0.0 && pseudo_ray_fraction < 1.0))
    throw std::domain_error("train.pseudo_ray_fraction must lie in [0, 1)");
  if (log_every < 1) throw std::domain_error("train.log_every must be >= 1");
  if (gradient_chunks < 1) throw std::domain_error("train.gradient_chunks must be >= 1");
  if (render.samples < 2) throw std::domain_error("render.samples must be >= 2");
  loss.validate();
}

Real TrainSettings::learning_rate_at(int step) const {
  if (steps <= 1 || learning_rate <= 0.0 || learning_rate_final <= 0.0) return learning_rate;
  const Real t = std::clamp(Real(step) / Real(steps - 1), 0.0, 1.0);
  return std::exp((1.0 - t) * std::log(learning_rate) + t * std::log(learning_rate_final));
}

void write_loss_csv_header(std::ostream &out) { out << "step,L_r,L_p,L_c,lambda1,total\n"; }

void write_loss_csv_row(std::ostream &out, const TrainLogRow &r) {
  out << r.step << ',' << r.rgb << ',' << r.pseudo << ',' << r.entropy << ',' << r.lambda1 << ',' << r.total
      << '\n';
}

namespace {

TrainLogRow step_impl(FieldParams &params, AdamState &adam, const std::vector<TrainingView> &views,
                      const ViewIndex &idx, const std::vector<Camera> &entropy_poses, const TrainSettings &s,
                      int step) {
  const std::uint64_t step_seed = Rng::mix(s.seed, std::uint64_t(step));
  Rng rng(step_seed);
  const std::vector<RaySpec> rays = sample_batch(views, idx, entropy_poses, s, rng);
  const std::size_t n = rays.size();
  const EncodingConfig &enc = params.config().encoding;

  const std::size_t n_chunks = std::min<std::size_t>(std::size_t(s.gradient_chunks), n);
  std::vector<Chunk> chunks(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    chunks[c].begin = c * n / n_chunks;
    chunks[c].end = (c + 1) * n / n_chunks;
  }

  parallel_chunks(n_chunks, s.threads, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      Chunk &ch = chunks[c];
      std::vector<int> omega_ids, phi_ids;
      for (std::size_t r = ch.begin; r < ch.end; ++r) {
        const RaySpec &spec = rays[r];
        ch.col0.push_back(Eigen::Index(omega_ids.size()));
        ch.samples.push_back(
            sample_stratified(spec.ray, spec.near, spec.far, s.render.samples, Rng::mix(step_seed, r)));
        omega_ids.insert(omega_ids.end(), ch.samples.back().size(), spec.omega);
        phi_ids.insert(phi_ids.end(), ch.samples.back().size(), spec.phi);
      }
      MatX pos, dir;
      encode_samples(enc, ch.samples, pos, dir);
      ch.cols = pos.cols();
      const FieldBatch out = evaluate_batch(params, pos, dir, omega_ids, phi_ids, &ch.cache);
      for (std::size_t k = 0; k < ch.samples.size(); ++k) {
        ConeRaySamples &smp = ch.samples[k];
        smp.outputs.resize(smp.size());
        for (std::size_t i = 0; i < smp.size(); ++i) smp.outputs[i] = out.at(ch.col0[k] + Eigen::Index(i));
        ch.rendered.push_back(composite_all(smp, s.render));
      }
    }
  });

  std::vector<LossRay> loss_rays;
  loss_rays.reserve(n);
  for (const Chunk &ch : chunks)
    for (std::size_t k = 0; k < ch.samples.size(); ++k) {
      const RaySpec &spec = rays[ch.begin + k];
      loss_rays.push_back({spec.role, spec.target, &ch.rendered[k], &ch.samples[k]});
    }
  std::vector<RayLossGrad> grads;
  const RayBatchLoss loss = total_loss(loss_rays, s.loss, step, params.config().beta_min, &grads);

  std::vector<GradientTape> tapes(n_chunks, GradientTape(params));
  parallel_chunks(n_chunks, s.threads, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      Chunk &ch = chunks[c];
      FieldBatch d_out(ch.cols);
      for (std::size_t k = 0; k < ch.samples.size(); ++k) {
        const RayLossGrad &g = grads[ch.begin + k];
        composite_backward(ch.samples[k], ch.rendered[k], g.rendered, s.render.background, d_out, ch.col0[k]);
        if (g.d_sigma_u_each != 0.0)
          d_out.sigma_u.segment(ch.col0[k], Eigen::Index(ch.samples[k].size())).array() += g.d_sigma_u_each;
      }
      backward(params, tapes[c], d_out, ch.cache);
    }
  });
  for (std::size_t c = 1; c < n_chunks; ++c)
    for (std::size_t i = 0; i < tapes[0].grads.size(); ++i) tapes[0].grads[i] += tapes[c].grads[i];

  adam_step(params.values, tapes[0].grads, adam, s.learning_rate_at(step));
  return {step, loss.rgb, loss.pseudo, loss.entropy, loss.lambda1, loss.total};
}

} // namespace

TrainLogRow train_step(FieldParams &params, AdamState &adam, const std::vector<TrainingView> &views,
                       const std::vector<Camera> &entropy_poses, const TrainSettings &settings, int step) {
  settings.validate();
  const ViewIndex idx = index_views(views);
  if (idx.seen.empty()) throw std::domain_error("training needs at least one seen view");
  return step_impl(params, adam, views, idx, entropy_poses, settings, step);
}

std::vector<TrainLogRow> train(FieldParams &params, AdamState &adam, const std::vector<TrainingView> &views,
                               const std::vector<Camera> &entropy_poses, const TrainSettings &settings,
                               std::ostream *csv) {
  settings.validate();
  const ViewIndex idx = index_views(views);
  if (idx.seen.empty()) throw std::domain_error("training needs at least one seen view");
  for (const TrainingView &tv : views)
    if (tv.phi < 0 || tv.phi >= params.config().num_images)
      throw std::domain_error("training view phi id " + std::to_string(tv.phi) + " exceeds field.num_images");

  std::vector<TrainLogRow> log;
  if (csv) write_loss_csv_header(*csv);
  for (int step = 0; step < settings.steps; ++step) {
    const TrainLogRow row = step_impl(params, adam, views, idx, entropy_poses, settings, step);
    if (step % settings.log_every == 0 || step + 1 == settings.steps) {
      log.push_back(row);
      if (csv) write_loss_csv_row(*csv, row);
    }
  }
  return log;
}

} // namespace selfnerf
