#pragma once

#include "selfnerf/field.hpp"
#include "selfnerf/pseudo_views.hpp"
#include "selfnerf/renderer.hpp"
#include "selfnerf/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfnerf {

/// Raised for unknown keys, wrong value types and out-of-range settings.
/// The message names the offending key or file.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SceneSettings {
  std::string path; // NeRF-synthetic directory
  std::string train_split = "train";
  int few_shot = 4;
  std::uint64_t few_shot_seed = 0;
  std::string validation_split = "val";
  int validation_count = 4; // 0 = every view of the split
  std::string test_split = "test";
  Real near = 2.0;
  Real far = 6.0;
};

struct SelfTrainingSettings {
  int max_iterations = 3;
  Real convergence_eps = 0.05; // dB
  Real unseen_pose_multiplier = 3.0;
  PosePolicy pose_policy = PosePolicy::Hemisphere;
  bool warm_start = false;
  bool use_warped = true;
  bool use_predicted = true;
};

/// Every tunable of a run. `field.num_images` is derived at run time and is
/// not part of the file schema.
struct AppConfig {
  std::string name = "run";
  std::uint64_t seed = 0;
  int threads = 0; // 0 = hardware concurrency
  SceneSettings scene;
  FieldConfig field;
  TrainSettings train; // holds the loss and render sections too
  SelfTrainingSettings self_training;

  void validate() const;
};

/// Full configuration with defaults, as JSON text.
std::string config_to_json(const AppConfig &cfg);

/// Applies a JSON document on top of the defaults; unknown keys are rejected.
AppConfig config_from_json(const std::string &text, const std::string &origin = "<config>");
AppConfig load_config(const std::filesystem::path &path);

/// `--set` override: dotted key and a JSON scalar (bare words are strings).
void apply_override(AppConfig &cfg, const std::string &assignment);

} // namespace selfnerf
