#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "selfnerf/analytic_scene.hpp"
#include "selfnerf/orchestrator.hpp"

#include <fstream>
#include <sstream>

using namespace selfnerf;
namespace fs = std::filesystem;

namespace {

std::vector<View> box_views(int n, std::uint64_t seed) {
  const AnalyticScene scene = make_box_scene(1.0);
  const auto cams = orbit_cameras(n, 4.0, 14.0, 12, 12, 2, 6, 0.3, 0.9, seed);
  std::vector<View> views;
  for (int i = 0; i < n; ++i)
    views.push_back({cams[i], render_analytic_image(scene, cams[i]).color, "view_" + std::to_string(i)});
  return views;
}

RunConfig tiny_run(const fs::path &dir) {
  RunConfig run;
  run.seen = box_views(3, 1);
  run.validation = box_views(2, 2);
  run.run_dir = dir;
  AppConfig &c = run.settings;
  c.threads = 1;
  c.field.trunk_depth = 2;
  c.field.trunk_width = 16;
  c.field.head_width = 8;
  c.field.dim_omega = 4;
  c.field.dim_phi = 4;
  c.field.encoding.pos_frequencies = 3;
  c.field.encoding.dir_frequencies = 1;
  c.train.render.samples = 8;
  c.train.batch_rays = 32;
  c.train.steps = 15;
  c.train.log_every = 5;
  c.train.learning_rate = 1e-2;
  c.train.loss.decay_interval = 5;
  c.self_training.unseen_pose_multiplier = 1.0;
  c.self_training.max_iterations = 2;
  return run;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("first model needs two seen views") {
  RunConfig run = tiny_run({});
  run.seen.resize(1);
  CHECK_THROWS_AS(train_first_model(run), std::domain_error);
  run.seen.clear();
  CHECK_THROWS_AS(train_first_model(run), std::domain_error);
}

TEST_CASE("validation views must differ from seen views") {
  RunConfig run = tiny_run({});
  run.validation.push_back(run.seen[0]);
  CHECK_THROWS_AS(train_first_model(run), std::domain_error);
}

TEST_CASE("embedding table covers seen and pseudo views") {
  const RunConfig run = tiny_run({});
  CHECK(unseen_pose_count(run) == 3);
  CHECK(run_field_config(run).num_images == 3 + 2 * 3);
}

TEST_CASE("single iteration returns the first model") {
  RunConfig run = tiny_run({});
  run.settings.self_training.max_iterations = 1;
  const PipelineResult r = run_pipeline(run);
  CHECK(r.history.size() == 1);
  CHECK(r.best_iteration == 1);
  const IterationState first = train_first_model(run);
  CHECK(r.best.params.values == first.model.values);
}

TEST_CASE("iteration leaves the teacher untouched and restarts the schedule") {
  const fs::path dir = selfnerf::testing::scratch_dir("orch_iter");
  const RunConfig run = tiny_run(dir);
  const IterationState first = train_first_model(run);
  const std::vector<Real> before = first.model.values;
  const IterationState second = run_iteration(first, run);
  CHECK(first.model.values == before);
  CHECK(second.iteration == 2);
  CHECK(second.history.size() == 2);
  CHECK(second.global_step == 30);
  CHECK(second.pseudo.size() == 6);
  for (const PseudoView &pv : second.pseudo)
    CHECK(pv.omega == (pv.provenance == Provenance::Warped ? WarpClass::SeenOrWarped : WarpClass::Predicted));
  CHECK(fs::exists(dir / "iter_2" / "pseudo" / "manifest.json"));
  CHECK(fs::exists(dir / "iter_2" / "checkpoint.bin"));
  CHECK(fs::exists(dir / "iter_2" / "metrics.csv"));
  CHECK(fs::exists(dir / "iter_2" / "val_renders" / "view_0.png"));
  std::ifstream loss(dir / "iter_2" / "loss.csv");
  std::string header, row;
  std::getline(loss, header);
  std::getline(loss, row);
  CHECK(header == "step,L_r,L_p,L_c,lambda1,total");
  CHECK(row.rfind("0,", 0) == 0);
  CHECK(row.find(",1,") != std::string::npos); // lambda1 back at its initial value
}

TEST_CASE("frozen student stops by non-improvement") {
  RunConfig run = tiny_run({});
  run.settings.train.learning_rate = 0.0;
  run.settings.train.learning_rate_final = 0.0;
  run.settings.self_training.max_iterations = 5;
  const PipelineResult r = run_pipeline(run);
  CHECK(r.history.size() == 2);
  CHECK(r.stop_reason == "converged");
  CHECK(r.history[0].psnr == r.history[1].psnr);
}

TEST_CASE("report rows and best checkpoint") {
  const fs::path dir = selfnerf::testing::scratch_dir("orch_report");
  RunConfig run = tiny_run(dir);
  run.settings.self_training.max_iterations = 3;
  run.settings.self_training.convergence_eps = 0.0;
  const PipelineResult r = run_pipeline(run);
  const auto rows = read_report(dir / "report.csv");
  REQUIRE(rows.size() == r.history.size());
  std::ifstream in(dir / "report.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,psnr,ssim,wall_time_s,best_psnr");
  Real best = -1e300, prev_best = -1e300;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].iteration == int(i) + 1);
    std::getline(in, line);
    const Real col = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(col >= prev_best);
    prev_best = col;
    best = std::max(best, rows[i].psnr);
  }
  Real best_recorded = -1e300;
  int arg = 0;
  for (const auto &m : r.history)
    if (m.psnr > best_recorded) {
      best_recorded = m.psnr;
      arg = m.iteration;
    }
  CHECK(r.best_iteration == arg);
  CHECK(slurp(dir / "best_checkpoint.bin") == slurp(dir / ("iter_" + std::to_string(arg)) / "checkpoint.bin"));
}

TEST_CASE("runs are deterministic and resumable") {
  const fs::path a = selfnerf::testing::scratch_dir("orch_a");
  const fs::path b = selfnerf::testing::scratch_dir("orch_b");
  RunConfig run = tiny_run(a);
  run.settings.self_training.convergence_eps = 0.0;
  run.settings.self_training.max_iterations = 2;
  run_pipeline(run);

  RunConfig resumed = tiny_run(b);
  resumed.settings.self_training.convergence_eps = 0.0;
  resumed.settings.self_training.max_iterations = 1;
  run_pipeline(resumed);
  resumed.settings.self_training.max_iterations = 2;
  resumed.settings.threads = 3;
  const PipelineResult r = run_pipeline(resumed, true);
  CHECK(r.history.size() == 2);
  for (const char *f : {"iter_1/checkpoint.bin", "iter_2/checkpoint.bin", "iter_2/metrics.csv", "iter_2/loss.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
}
