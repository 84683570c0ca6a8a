#pragma once

#include "selfnerf/checkpoint.hpp"
#include "selfnerf/config.hpp"
#include "selfnerf/dataset.hpp"
#include "selfnerf/pseudo_views.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

namespace selfnerf {

struct RunConfig {
  AppConfig settings;
  std::vector<View> seen;
  std::vector<View> validation; // held-out poses with ground truth
  std::filesystem::path run_dir; // empty = keep everything in memory
  std::ostream *progress = nullptr;
};

struct IterationMetrics {
  int iteration = 0;
  Real psnr = 0.0;
  Real ssim = 0.0;
  Real wall_time_s = 0.0;
};

struct IterationState {
  int iteration = 0; // 1 for the first model
  FieldParams model;
  AdamState adam;
  std::vector<PseudoView> pseudo; // the set the current model was trained on
  UnseenPoseSet poses;            // fixed for the whole run
  std::vector<IterationMetrics> history;
  LossWeights weights;
  std::int64_t global_step = 0;

  explicit IterationState(FieldParams params) : model(std::move(params)) {}
};

/// Field configuration used by every model of the run: one phi row per seen
/// view and per pseudo-view slot.
FieldConfig run_field_config(const RunConfig &cfg);
int unseen_pose_count(const RunConfig &cfg);
UnseenPoseSet run_unseen_poses(const RunConfig &cfg);

/// Seen-only first model trained with L_r + lambda2 L_c.
/// Throws std::domain_error with fewer than two seen views.
IterationState train_first_model(const RunConfig &cfg);

/// Builds pseudo-views from `teacher` and trains the next student on seen +
/// pseudo data. The teacher is never modified.
IterationState run_iteration(const IterationState &teacher, const RunConfig &cfg);

/// Validation PSNR / SSIM of C^r renders against the validation views.
IterationMetrics evaluate_model(const FieldParams &model, const RunConfig &cfg, int iteration,
                                const std::filesystem::path &render_dir = {});

struct PipelineResult {
  Checkpoint best;
  int best_iteration = 0;
  std::vector<IterationMetrics> history;
  std::string stop_reason;
};

/// Iterates until validation PSNR improves by no more than
/// self_training.convergence_eps over the previous iteration, or until
/// max_iterations. Returns the checkpoint with the highest validation PSNR.
/// With `resume`, completed iterations found in run_dir are reused.
PipelineResult run_pipeline(const RunConfig &cfg, bool resume = false);

/// Writes the per-iteration report (iteration, psnr, ssim, wall time, best-so-far psnr).
void write_report(const std::filesystem::path &path, const std::vector<IterationMetrics> &history);
std::vector<IterationMetrics> read_report(const std::filesystem::path &path);

} // namespace selfnerf
