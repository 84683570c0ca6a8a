#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "selfnerf/analytic_scene.hpp"
#include "selfnerf/config.hpp"
#include "selfnerf/dataset.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

using namespace selfnerf;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path &p, const std::string &text) { std::ofstream(p) << text; }

void write_rgba(const fs::path &path, int w, int h, const std::vector<std::uint8_t> &rgba) {
  FILE *fp = std::fopen(path.c_str(), "wb");
  REQUIRE(fp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) png_write_row(png, rgba.data() + 4 * w * y);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

const char *kPose = "[[1,0,0,0],[0,1,0,0],[0,0,1,4],[0,0,0,1]]";

} // namespace

TEST_CASE("focal from field of view") {
  CHECK(focal_from_fov(0.6911112, 800) == doctest::Approx(1111.11).epsilon(1e-5));
  CHECK(fov_from_focal(focal_from_fov(0.5, 64), 64) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("writer and loader round trip") {
  const fs::path dir = selfnerf::testing::scratch_dir("dataset_rt");
  const auto cams = orbit_cameras(5, 4.0, 30.0, 10, 8, 2, 6, 0.2, 0.8, 3);
  Rng rng(1);
  std::vector<View> views;
  for (const Camera &c : cams) {
    Image img(10, 8);
    for (Real &v : img.data) v = Real(rng.index(256)) / 255.0;
    views.push_back({c, img, ""});
  }
  write_nerf_synthetic(dir, "train", views);
  const SceneDataset ds = load_nerf_synthetic(dir, "train");
  REQUIRE(ds.views.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(ds.views[i].image.data == views[i].image.data);
    CHECK((ds.views[i].camera.rotation - cams[i].rotation).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((ds.views[i].camera.translation - cams[i].translation).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(ds.views[i].camera.focal_x() == doctest::Approx(30.0).epsilon(1e-12));
  }
}

TEST_CASE("RGBA images are composited onto the background") {
  const fs::path dir = selfnerf::testing::scratch_dir("dataset_rgba");
  fs::create_directories(dir / "train");
  write_rgba(dir / "train" / "a.png", 2, 1, {255, 0, 0, 255, 0, 0, 255, 0});
  write_text(dir / "transforms_train.json",
             std::string("{\"camera_angle_x\": 0.7, \"frames\": [{\"file_path\": \"./train/a\", "
                         "\"transform_matrix\": ") + kPose + "}]}");
  const SceneDataset ds = load_nerf_synthetic(dir, "train", 2, 6, 1.0);
  CHECK(ds.views[0].image.at(0, 0).isApprox(Rgb(1, 0, 0)));
  CHECK(ds.views[0].image.at(1, 0).isApprox(Rgb(1, 1, 1)));
}

TEST_CASE("loader errors name the file and frame") {
  const fs::path dir = selfnerf::testing::scratch_dir("dataset_err");
  CHECK_THROWS_AS(load_nerf_synthetic(dir, "train"), DatasetError);

  write_text(dir / "transforms_train.json", "{\n  \"camera_angle_x\": 0.7,\n  \"frames\": [\n");
  try {
    load_nerf_synthetic(dir, "train");
    FAIL("expected an error");
  } catch (const DatasetError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("transforms_train.json") != std::string::npos);
    CHECK(msg.find("line") != std::string::npos);
  }

  write_text(dir / "transforms_train.json",
             "{\"camera_angle_x\": 0.7, \"frames\": [{\"file_path\": \"./train/x\", "
             "\"transform_matrix\": [[1,0,0,0],[0,1,0,0],[0,0,1,4]]}]}");
  CHECK_THROWS_WITH_AS(load_nerf_synthetic(dir, "train"), doctest::Contains("frames[0]"), DatasetError);

  write_text(dir / "transforms_train.json",
             std::string("{\"camera_angle_x\": 0.7, \"frames\": [{\"file_path\": \"./train/missing\", "
                         "\"transform_matrix\": ") + kPose + "}]}");
  CHECK_THROWS_WITH_AS(load_nerf_synthetic(dir, "train"), doctest::Contains("missing"), DatasetError);

  write_text(dir / "transforms_train.json", "{\"camera_angle_x\": 0.7, \"frames\": []}");
  CHECK(load_nerf_synthetic(dir, "train").views.empty());
}

TEST_CASE("few-shot selection") {
  SceneDataset ds;
  for (int i = 0; i < 100; ++i) ds.views.push_back({Camera{}, Image(1, 1), std::to_string(i)});
  const SceneDataset all = select_few_shot(ds, 100, 3);
  CHECK(all.views.size() == 100);
  CHECK(all.views[17].name == "17");
  const SceneDataset a = select_few_shot(ds, 4, 7), b = select_few_shot(ds, 4, 7);
  REQUIRE(a.views.size() == 4);
  CHECK(a.held_out.size() == 96);
  for (int i = 0; i < 4; ++i) CHECK(a.views[i].name == b.views[i].name);
  std::set<std::string> subsets;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::string key;
    for (const View &v : select_few_shot(ds, 4, seed).views) key += v.name + ",";
    subsets.insert(key);
  }
  CHECK(subsets.size() >= 2);
  CHECK_THROWS_AS(select_few_shot(ds, 101, 0), std::domain_error);
}

TEST_CASE("config defaults and strict keys") {
  const AppConfig d = config_from_json("{}");
  CHECK(d.train.steps == 5000);
  CHECK(d.train.loss.lambda2 == 0.01);
  CHECK(d.self_training.convergence_eps == 0.05);
  CHECK(d.self_training.pose_policy == PosePolicy::Hemisphere);
  CHECK(d.field.trunk_depth == 4);
  CHECK(d.field.trunk_width == 128);

  CHECK_THROWS_WITH_AS(config_from_json("{\"train\": {\"stepz\": 3}}"), doctest::Contains("train.stepz"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json("{\"render\": {\"samples\": \"many\"}}"),
                       doctest::Contains("render.samples"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json("{\"train\": {\"batch_rays\": 0}}"), doctest::Contains("batch_rays"),
                       ConfigError);
  CHECK_THROWS_AS(config_from_json("{oops"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json("{\"self_training\": {\"pose_policy\": \"sphere\"}}"),
                       doctest::Contains("pose_policy"), ConfigError);
}

TEST_CASE("config overrides and round trip") {
  AppConfig cfg;
  apply_override(cfg, "train.batch_rays=64");
  apply_override(cfg, "loss.lambda2=0.5");
  apply_override(cfg, "self_training.pose_policy=interpolate");
  apply_override(cfg, "scene.path=/tmp/x");
  apply_override(cfg, "seed=9");
  CHECK(cfg.train.batch_rays == 64);
  CHECK(cfg.train.loss.lambda2 == 0.5);
  CHECK(cfg.self_training.pose_policy == PosePolicy::Interpolate);
  CHECK(cfg.scene.path == "/tmp/x");
  CHECK(cfg.train.seed == 9);
  CHECK_THROWS_WITH_AS(apply_override(cfg, "train.nope=1"), doctest::Contains("train.nope"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "seed=-1"), ConfigError);

  const AppConfig back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
}

TEST_CASE("depth raw round trip") {
  const fs::path dir = selfnerf::testing::scratch_dir("depth_raw");
  DepthMap d(3, 2, 2.0, 6.0);
  d.depth = {2.5, 3.0, 0.0, 4.25, 5.5, 0.0};
  d.valid = {1, 1, 0, 1, 1, 0};
  write_depth_raw(dir / "d.depth", d);
  const DepthMap back = read_depth_raw(dir / "d.depth");
  CHECK(back.width == 3);
  CHECK(back.valid == d.valid);
  for (std::size_t i = 0; i < 6; ++i)
    if (d.valid[i]) CHECK(back.depth[i] == d.depth[i]);
}
