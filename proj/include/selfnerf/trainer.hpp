#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/field.hpp"
#include "selfnerf/image.hpp"
#include "selfnerf/objectives.hpp"
#include "selfnerf/optimizer.hpp"
#include "selfnerf/renderer.hpp"

#include <cstdint>
#include <ostream>
#include <vector>

namespace selfnerf {

/// A supervised image: seen views carry a full mask, pseudo-views may not.
struct TrainingView {
  Camera camera;
  Image image;
  Mask mask; // empty = every pixel valid
  WarpClass omega = WarpClass::SeenOrWarped;
  int phi = 0;
  RayRole role = RayRole::Seen;
};

struct TrainSettings {
  int steps = 5000;
  int batch_rays = 512;
  Real learning_rate = 5e-4;
  Real learning_rate_final = 5e-5; // log-linear decay over `steps`
  /// Share of the supervised (non-entropy) rays drawn from pseudo-views.
  Real pseudo_ray_fraction = 0.5;
  int log_every = 50;
  /// Fixed batch partition for the gradient reduction; results do not depend on `threads`.
  int gradient_chunks = 8;
  int threads = 1;
  RenderSettings render;
  LossWeights loss;
  std::uint64_t seed = 0;

  void validate() const;
  Real learning_rate_at(int step) const;
};

struct TrainLogRow {
  int step = 0;
  Real rgb = 0.0;
  Real pseudo = 0.0;
  Real entropy = 0.0;
  Real lambda1 = 0.0;
  Real total = 0.0;
};

void write_loss_csv_header(std::ostream &out);
void write_loss_csv_row(std::ostream &out, const TrainLogRow &row);

/// One optimisation step over a freshly sampled batch. `step` drives the ray
/// sampling seed, the learning-rate decay and the lambda1 schedule.
TrainLogRow train_step(FieldParams &params, AdamState &adam, const std::vector<TrainingView> &views,
                       const std::vector<Camera> &entropy_poses, const TrainSettings &settings, int step);

/// Runs settings.steps steps. Rows are logged every `log_every` steps and at
/// the final step; `csv` (optional) receives them as they are produced.
/// Throws std::domain_error when no seen view is supplied.
std::vector<TrainLogRow> train(FieldParams &params, AdamState &adam, const std::vector<TrainingView> &views,
                               const std::vector<Camera> &entropy_poses, const TrainSettings &settings,
                               std::ostream *csv = nullptr);

} // namespace selfnerf
