#include "selfnerf/orchestrator.hpp"

#include "selfnerf/metrics.hpp"
#include "selfnerf/rng.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace selfnerf {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kPoseStream = 0x9053;
constexpr std::uint64_t kTrainStream = 0x7a11;

fs::path iteration_dir(const RunConfig &cfg, int iteration) {
  return cfg.run_dir / ("iter_" + std::to_string(iteration));
}

void log(const RunConfig &cfg, const std::string &msg) {
  if (cfg.progress) *cfg.progress << msg << std::endl;
}

std::vector<TrainingView> seen_training_views(const RunConfig &cfg) {
  std::vector<TrainingView> views;
  for (std::size_t i = 0; i < cfg.seen.size(); ++i)
    views.push_back({cfg.seen[i].camera, cfg.seen[i].image, {}, WarpClass::SeenOrWarped, int(i), RayRole::Seen});
  return views;
}

TrainSettings train_settings(const RunConfig &cfg, int iteration) {
  TrainSettings t = cfg.settings.train;
  t.seed = Rng::mix(Rng::mix(cfg.settings.seed, kTrainStream), std::uint64_t(iteration));
  t.threads = cfg.settings.threads;
  return t;
}

std::vector<Camera> entropy_poses(const RunConfig &cfg, const UnseenPoseSet &poses) {
  const LossWeights &w = cfg.settings.train.loss;
  if (w.lambda2 <= 0.0 || w.entropy_ray_fraction <= 0.0) return {};
  return poses.cameras;
}

void check_inputs(const RunConfig &cfg) {
  cfg.settings.validate();
  if (cfg.seen.size() < 2) throw std::domain_error("self-training needs at least two seen views");
  for (const View &v : cfg.validation)
    for (const View &s : cfg.seen)
      if (same_pose(v.camera, s.camera))
        throw std::domain_error("validation view '" + v.name + "' duplicates seen view '" + s.name + "'");
}

IterationState train_model(const RunConfig &cfg, int iteration, const FieldParams *warm_start,
                           const std::vector<TrainingView> &views, const UnseenPoseSet &poses) {
  const auto start = std::chrono::steady_clock::now();
  const FieldConfig fcfg = run_field_config(cfg);
  IterationState state(warm_start ? *warm_start : init_params(fcfg, Rng::mix(cfg.settings.seed, kInitStream)));
  state.iteration = iteration;
  state.poses = poses;
  state.weights = cfg.settings.train.loss;

  const TrainSettings ts = train_settings(cfg, iteration);
  const fs::path dir = cfg.run_dir.empty() ? fs::path() : iteration_dir(cfg, iteration);
  std::ofstream loss_log;
  if (!dir.empty()) {
    fs::create_directories(dir);
    loss_log.open(dir / "loss.csv");
    loss_log << std::setprecision(10);
  }
  log(cfg, "iteration " + std::to_string(iteration) + ": training " + std::to_string(ts.steps) + " steps on " +
               std::to_string(views.size()) + " views");
  train(state.model, state.adam, views, entropy_poses(cfg, poses), ts, dir.empty() ? nullptr : &loss_log);
  state.global_step = ts.steps;

  IterationMetrics m = evaluate_model(state.model, cfg, iteration, dir.empty() ? fs::path() : dir / "val_renders");
  m.wall_time_s = std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();
  state.history.push_back(m);
  if (!dir.empty()) save_checkpoint(dir / "checkpoint.bin", state.model, state.adam);
  log(cfg, "iteration " + std::to_string(iteration) + ": validation psnr " + std::to_string(m.psnr) + " ssim " +
               std::to_string(m.ssim));
  return state;
}

} // namespace

FieldConfig run_field_config(const RunConfig &cfg) {
  FieldConfig f = cfg.settings.field;
  f.num_images = int(cfg.seen.size()) + 2 * unseen_pose_count(cfg);
  return f;
}

int unseen_pose_count(const RunConfig &cfg) {
  return std::max(1, int(std::lround(cfg.settings.self_training.unseen_pose_multiplier * cfg.seen.size())));
}

UnseenPoseSet run_unseen_poses(const RunConfig &cfg) {
  std::vector<Camera> cams;
  for (const View &v : cfg.seen) cams.push_back(v.camera);
  return sample_unseen_poses(cams, unseen_pose_count(cfg), cfg.settings.self_training.pose_policy,
                             Rng::mix(cfg.settings.seed, kPoseStream));
}

IterationMetrics evaluate_model(const FieldParams &model, const RunConfig &cfg, int iteration,
                                const fs::path &render_dir) {
  IterationMetrics m;
  m.iteration = iteration;
  if (cfg.validation.empty()) {
    m.psnr = m.ssim = std::numeric_limits<Real>::quiet_NaN();
    return m;
  }
  RenderSettings eval = cfg.settings.train.render;
  MetricReport report;
  std::ofstream csv;
  if (!render_dir.empty()) {
    fs::create_directories(render_dir);
    csv.open(render_dir.parent_path() / "metrics.csv");
    csv << std::setprecision(10) << "view,psnr,ssim\n";
  }
  for (const View &v : cfg.validation) {
    const Image img = render_image(model, v.camera, eval, cfg.settings.threads).color;
    report.add(img, v.image);
    if (!render_dir.empty()) {
      write_png(render_dir / (fs::path(v.name).filename().string() + ".png"), img);
      csv << v.name << ',' << report.psnr.back() << ',' << report.ssim.back() << '\n';
    }
  }
  m.psnr = report.mean_psnr();
  m.ssim = report.mean_ssim();
  if (csv.is_open()) csv << "mean," << m.psnr << ',' << m.ssim << '\n';
  return m;
}

IterationState train_first_model(const RunConfig &cfg) {
  check_inputs(cfg);
  return train_model(cfg, 1, nullptr, seen_training_views(cfg), run_unseen_poses(cfg));
}

IterationState run_iteration(const IterationState &teacher, const RunConfig &cfg) {
  check_inputs(cfg);
  const int iteration = teacher.iteration + 1;
  const int s = int(cfg.seen.size());
  const int p = int(teacher.poses.cameras.size());
  if (teacher.model.config().num_images != s + 2 * p)
    throw std::domain_error("teacher embedding table does not match the run configuration");

  const SelfTrainingSettings &st = cfg.settings.self_training;
  const RenderSettings &rs = cfg.settings.train.render;
  std::vector<PseudoView> pseudo;
  if (st.use_warped) {
    auto w = make_warped_pseudo_views(teacher.model, cfg.seen, teacher.poses, rs, teacher.iteration, s,
                                      cfg.settings.threads);
    pseudo.insert(pseudo.end(), w.begin(), w.end());
  }
  if (st.use_predicted) {
    auto pr = make_predicted_pseudo_views(teacher.model, teacher.poses, rs, teacher.iteration, s + p,
                                          cfg.settings.threads);
    pseudo.insert(pseudo.end(), pr.begin(), pr.end());
  }
  if (!cfg.run_dir.empty()) save_pseudo_views(iteration_dir(cfg, iteration) / "pseudo", pseudo);

  std::vector<TrainingView> views = seen_training_views(cfg);
  for (const PseudoView &pv : pseudo)
    views.push_back({pv.camera, pv.image, pv.mask, pv.omega, pv.phi, RayRole::Pseudo});

  IterationState next =
      train_model(cfg, iteration, st.warm_start ? &teacher.model : nullptr, views, teacher.poses);
  next.pseudo = std::move(pseudo);
  next.global_step += teacher.global_step;
  std::vector<IterationMetrics> history = teacher.history;
  history.push_back(next.history.back());
  next.history = std::move(history);
  return next;
}

void write_report(const fs::path &path, const std::vector<IterationMetrics> &history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << std::setprecision(10) << "iteration,psnr,ssim,wall_time_s,best_psnr\n";
  Real best = -std::numeric_limits<Real>::infinity();
  for (const IterationMetrics &m : history) {
    best = std::max(best, m.psnr);
    out << m.iteration << ',' << m.psnr << ',' << m.ssim << ',' << m.wall_time_s << ',' << best << '\n';
  }
}

std::vector<IterationMetrics> read_report(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string line;
  std::getline(in, line);
  std::vector<IterationMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    IterationMetrics m;
    char comma = 0;
    if (!(ss >> m.iteration >> comma >> m.psnr >> comma >> m.ssim >> comma >> m.wall_time_s))
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    rows.push_back(m);
  }
  return rows;
}

PipelineResult run_pipeline(const RunConfig &cfg, bool resume) {
  check_inputs(cfg);
  if (cfg.validation.empty()) throw std::domain_error("the pipeline needs at least one validation view");
  const int max_iterations = cfg.settings.self_training.max_iterations;
  const Real eps = cfg.settings.self_training.convergence_eps;

  std::optional<IterationState> state;
  if (resume && !cfg.run_dir.empty() && fs::exists(cfg.run_dir / "report.csv")) {
    auto history = read_report(cfg.run_dir / "report.csv");
    if (!history.empty()) {
      const int last = history.back().iteration;
      Checkpoint ck = load_checkpoint(iteration_dir(cfg, last) / "checkpoint.bin");
      if (ck.params.config().num_images != run_field_config(cfg).num_images)
        throw std::domain_error("run directory was produced with a different configuration");
      state.emplace(std::move(ck.params));
      state->adam = std::move(ck.adam);
      state->iteration = last;
      state->poses = run_unseen_poses(cfg);
      state->weights = cfg.settings.train.loss;
      state->history = std::move(history);
      state->global_step = std::int64_t(last) * cfg.settings.train.steps;
      log(cfg, "resuming after iteration " + std::to_string(last));
    }
  }

  auto converged = [&](const std::vector<IterationMetrics> &h) {
    return h.size() >= 2 && !(h.back().psnr - h[h.size() - 2].psnr > eps);
  };
  auto persist = [&](const IterationState &s) {
    if (!cfg.run_dir.empty()) write_report(cfg.run_dir / "report.csv", s.history);
  };

  if (!state) {
    if (!cfg.run_dir.empty()) fs::create_directories(cfg.run_dir);
    state.emplace(train_first_model(cfg));
    persist(*state);
  }

  PipelineResult result{Checkpoint{state->model, state->adam}, state->iteration, {}, "max_iterations"};
  Real best_psnr = -std::numeric_limits<Real>::infinity();
  for (const IterationMetrics &m : state->history)
    if (m.psnr > best_psnr) {
      best_psnr = m.psnr;
      result.best_iteration = m.iteration;
    }
  if (result.best_iteration != state->iteration && !cfg.run_dir.empty())
    result.best = load_checkpoint(iteration_dir(cfg, result.best_iteration) / "checkpoint.bin");

  while (state->iteration < max_iterations && !converged(state->history)) {
    IterationState next = run_iteration(*state, cfg);
    persist(next);
    if (next.history.back().psnr > best_psnr) {
      best_psnr = next.history.back().psnr;
      result.best_iteration = next.iteration;
      result.best = Checkpoint{next.model, next.adam};
    }
    state.emplace(std::move(next));
  }
  if (converged(state->history)) result.stop_reason = "converged";
  result.history = state->history;
  if (!cfg.run_dir.empty()) {
    save_checkpoint(cfg.run_dir / "best_checkpoint.bin", result.best.params, result.best.adam);
    std::ofstream(cfg.run_dir / "best_iteration.txt") << result.best_iteration << '\n';
  }
  log(cfg, "stopped (" + result.stop_reason + "); best iteration " + std::to_string(result.best_iteration));
  return result;
}

} // namespace selfnerf
