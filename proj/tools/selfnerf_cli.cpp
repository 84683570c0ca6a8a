#include "selfnerf/analytic_scene.hpp"
#include "selfnerf/checkpoint.hpp"
#include "selfnerf/config.hpp"
#include "selfnerf/dataset.hpp"
#include "selfnerf/metrics.hpp"
#include "selfnerf/orchestrator.hpp"
#include "selfnerf/toy.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace selfnerf;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

void add_common(CLI::App *cmd, Common &c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "JSON configuration file");
    cmd->add_option("--set", c.sets, "override, e.g. --set train.batch_rays=256 (repeatable)");
  }
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--threads", c.threads, "worker threads (0 = auto)");
  cmd->add_option("--out", c.out, "output directory");
}

AppConfig resolve_config(const Common &c) {
  AppConfig cfg = c.config.empty() ? AppConfig{} : load_config(c.config);
  for (const std::string &s : c.sets) apply_override(cfg, s);
  if (c.seed) apply_override(cfg, "seed=" + std::to_string(*c.seed));
  if (c.threads) apply_override(cfg, "threads=" + std::to_string(*c.threads));
  return cfg;
}

std::vector<View> first_views(std::vector<View> views, int count) {
  if (count > 0 && std::size_t(count) < views.size()) views.resize(std::size_t(count));
  return views;
}

RunConfig make_run(const AppConfig &cfg, const std::string &out) {
  if (cfg.scene.path.empty()) throw ConfigError("scene.path must name a dataset directory");
  RunConfig run;
  run.settings = cfg;
  const SceneDataset train = load_nerf_synthetic(cfg.scene.path, cfg.scene.train_split, cfg.scene.near,
                                                 cfg.scene.far, cfg.train.render.background);
  if (std::size_t(cfg.scene.few_shot) > train.views.size())
    throw ConfigError("scene.few_shot exceeds the " + std::to_string(train.views.size()) + " views of split '" +
                      cfg.scene.train_split + "'");
  run.seen = select_few_shot(train, std::size_t(cfg.scene.few_shot), cfg.scene.few_shot_seed).views;
  if (!cfg.scene.validation_split.empty()) {
    const SceneDataset val = load_nerf_synthetic(cfg.scene.path, cfg.scene.validation_split, cfg.scene.near,
                                                 cfg.scene.far, cfg.train.render.background);
    run.validation = first_views(val.views, cfg.scene.validation_count);
  }
  run.run_dir = fs::path(out.empty() ? "run" : out) / cfg.name;
  run.progress = &std::cerr;
  fs::create_directories(run.run_dir);
  std::ofstream(run.run_dir / "config.json") << config_to_json(cfg) << '\n';
  return run;
}

int cmd_train(const Common &c) {
  const RunConfig run = make_run(resolve_config(c), c.out);
  const IterationState state = train_first_model(run);
  write_report(run.run_dir / "report.csv", state.history);
  std::cout << run.run_dir.string() << '\n';
  return 0;
}

int cmd_iterate(const Common &c, bool resume) {
  const RunConfig run = make_run(resolve_config(c), c.out);
  const PipelineResult result = run_pipeline(run, resume);
  std::cout << run.run_dir.string() << " best_iteration=" << result.best_iteration << " stop=" << result.stop_reason
            << '\n';
  return 0;
}

fs::path checkpoint_in(const fs::path &run_dir) {
  const fs::path best = run_dir / "best_checkpoint.bin";
  if (fs::exists(best)) return best;
  const auto history = read_report(run_dir / "report.csv");
  if (history.empty()) throw std::runtime_error((run_dir / "report.csv").string() + ": no completed iteration");
  return run_dir / ("iter_" + std::to_string(history.back().iteration)) / "checkpoint.bin";
}

int cmd_render(const Common &c, const std::string &checkpoint, const std::string &split) {
  const AppConfig cfg = resolve_config(c);
  if (cfg.scene.path.empty()) throw ConfigError("scene.path must name a dataset directory");
  const Checkpoint ck = load_checkpoint(checkpoint);
  const SceneDataset ds =
      load_nerf_synthetic(cfg.scene.path, split, cfg.scene.near, cfg.scene.far, cfg.train.render.background);
  const fs::path out = c.out.empty() ? fs::path("renders") : fs::path(c.out);
  fs::create_directories(out);
  for (const View &v : ds.views) {
    const RenderedImage r = render_image(ck.params, v.camera, cfg.train.render, cfg.threads);
    const std::string stem = fs::path(v.name).filename().string();
    write_png(out / (stem + ".png"), r.color);
    write_depth_raw(out / (stem + ".depth"), r.depth);
  }
  std::cout << ds.views.size() << " views rendered to " << out.string() << '\n';
  return 0;
}

int cmd_eval(const Common &c, const std::string &run_dir_arg, const std::string &split) {
  const fs::path run_dir(run_dir_arg);
  AppConfig cfg = load_config(run_dir / "config.json");
  for (const std::string &s : c.sets) apply_override(cfg, s);
  if (c.threads) apply_override(cfg, "threads=" + std::to_string(*c.threads));
  const Checkpoint ck = load_checkpoint(checkpoint_in(run_dir));
  const SceneDataset ds =
      load_nerf_synthetic(cfg.scene.path, split, cfg.scene.near, cfg.scene.far, cfg.train.render.background);
  const fs::path out = c.out.empty() ? run_dir : fs::path(c.out);
  fs::create_directories(out);
  std::ofstream csv(out / "eval.csv");
  csv << std::setprecision(10) << "view,psnr,ssim\n";
  MetricReport report;
  for (const View &v : ds.views) {
    report.add(render_image(ck.params, v.camera, cfg.train.render, cfg.threads).color, v.image);
    csv << v.name << ',' << report.psnr.back() << ',' << report.ssim.back() << '\n';
  }
  csv << "mean," << report.mean_psnr() << ',' << report.mean_ssim() << '\n';
  std::cout << "psnr " << report.mean_psnr() << " ssim " << report.mean_ssim() << " (" << ds.views.size()
            << " views) -> " << (out / "eval.csv").string() << '\n';
  return 0;
}

int cmd_toy(const Common &c, int seeds, const std::string &curve) {
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  const std::uint64_t base = c.seed.value_or(0);
  std::ofstream file;
  std::ostream *out = &std::cout;
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    file.open(fs::path(c.out) / "toy.csv");
    out = &file;
  }
  std::ofstream curve_file;
  if (!curve.empty()) {
    curve_file.open(curve);
    if (!curve_file) throw std::runtime_error(curve + ": cannot open for writing");
    curve_file << std::setprecision(10) << "seed,x,truth,f1,f2\n";
  }
  *out << std::setprecision(10) << "seed,mae_f1,mae_f2\n";
  for (int s = 0; s < seeds; ++s) {
    const toy::ToyReport r = toy::run_basic_step(toy::ToyConfig{}, base + std::uint64_t(s));
    *out << r.seed << ',' << r.mae_f1 << ',' << r.mae_f2 << '\n';
    if (curve_file.is_open())
      for (std::size_t i = 0; i < r.grid_x.size(); ++i)
        curve_file << r.seed << ',' << r.grid_x[i] << ',' << toy::target_function(r.grid_x[i]) << ','
                   << r.curve_f1[i] << ',' << r.curve_f2[i] << '\n';
  }
  return 0;
}

struct SceneOptions {
  std::string kind = "boxes";
  int width = 64;
  int height = 64;
  Real fov = 0.6911112;
  Real radius = 4.0;
  int train_views = 20;
  int val_views = 8;
  int test_views = 8;
};

int cmd_make_scene(const Common &c, const SceneOptions &o) {
  if (c.out.empty()) throw ConfigError("--out must name the scene directory");
  if (o.width < 1 || o.height < 1) throw ConfigError("--width/--height must be positive");
  AnalyticScene scene;
  if (o.kind == "boxes") {
    scene = make_box_scene(1.0);
  } else if (o.kind == "plane") {
    scene.medium = TexturedPlane{Vec3::Zero(), Vec3::UnitZ(), Vec3::UnitX(), 3.0};
    scene.background = 1.0;
  } else if (o.kind == "homogeneous") {
    scene.medium = HomogeneousMedium{0.2, Rgb(0.9, 0.6, 0.3)};
    scene.background = 1.0;
  } else {
    throw ConfigError("--kind must be boxes, plane or homogeneous (got '" + o.kind + "')");
  }
  const std::uint64_t seed = c.seed.value_or(0);
  const Real focal = focal_from_fov(o.fov, o.width);
  const std::pair<std::string, int> splits[] = {
      {"train", o.train_views}, {"val", o.val_views}, {"test", o.test_views}};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto &[split, count] = splits[k];
    const auto cams = orbit_cameras(count, o.radius, focal, o.width, o.height, 2.0, 6.0, 0.25, 1.0,
                                    Rng::mix(seed, k));
    std::vector<View> views;
    for (int i = 0; i < count; ++i)
      views.push_back({cams[i], render_analytic_image(scene, cams[i]).color, "r_" + std::to_string(i)});
    write_nerf_synthetic(c.out, split, views);
  }
  std::cout << "scene written to " << c.out << '\n';
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Uncertainty-aware radiance fields with iterative self-training"};
  app.require_subcommand(1);
  Common common;
  bool resume = false;
  std::string checkpoint, split = "test", run_dir, curve;
  int seeds = 5;
  SceneOptions scene;

  auto *train = app.add_subcommand("train", "train the first model on the seen views");
  add_common(train, common);
  auto *iterate = app.add_subcommand("iterate", "run the full self-training pipeline");
  add_common(iterate, common);
  iterate->add_flag("--resume", resume, "reuse completed iterations found in the run directory");
  auto *render = app.add_subcommand("render", "render the views of a split from a checkpoint");
  add_common(render, common);
  render->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  render->add_option("--split", split, "dataset split whose poses are rendered");
  auto *eval = app.add_subcommand("eval", "PSNR/SSIM of a run's best model on held-out views");
  add_common(eval, common);
  eval->add_option("--run", run_dir, "run directory (contains config.json)")->required();
  eval->add_option("--split", split, "ground-truth split");
  auto *toy_cmd = app.add_subcommand("toy", "1-D self-training experiment");
  add_common(toy_cmd, common, false);
  toy_cmd->add_option("--seeds", seeds, "number of seeds");
  toy_cmd->add_option("--curve", curve, "also write sampled curves to this CSV");
  auto *make = app.add_subcommand("make-scene", "write an analytic scene in NeRF-synthetic layout");
  add_common(make, common, false);
  make->add_option("--kind", scene.kind, "boxes | plane | homogeneous");
  make->add_option("--width", scene.width);
  make->add_option("--height", scene.height);
  make->add_option("--fov", scene.fov, "horizontal field of view in radians");
  make->add_option("--radius", scene.radius, "camera distance from the origin");
  make->add_option("--train-views", scene.train_views);
  make->add_option("--val-views", scene.val_views);
  make->add_option("--test-views", scene.test_views);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*train) return cmd_train(common);
    if (*iterate) return cmd_iterate(common, resume);
    if (*render) return cmd_render(common, checkpoint, split);
    if (*eval) return cmd_eval(common, run_dir, split);
    if (*toy_cmd) return cmd_toy(common, seeds, curve);
    if (*make) return cmd_make_scene(common, scene);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
