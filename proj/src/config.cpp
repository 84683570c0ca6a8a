#include "selfnerf/config.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace selfnerf {
namespace {

using nlohmann::ordered_json;

ordered_json to_json(const AppConfig &c) {
  const TrainSettings &t = c.train;
  ordered_json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["scene"] = {{"path", c.scene.path},
                {"train_split", c.scene.train_split},
                {"few_shot", c.scene.few_shot},
                {"few_shot_seed", c.scene.few_shot_seed},
                {"validation_split", c.scene.validation_split},
                {"validation_count", c.scene.validation_count},
                {"test_split", c.scene.test_split},
                {"near", c.scene.near},
                {"far", c.scene.far}};
  j["encoding"] = {{"pos_frequencies", c.field.encoding.pos_frequencies},
                   {"dir_frequencies", c.field.encoding.dir_frequencies},
                   {"include_input", c.field.encoding.include_input}};
  j["field"] = {{"trunk_depth", c.field.trunk_depth}, {"trunk_width", c.field.trunk_width},
                {"head_width", c.field.head_width},   {"dim_omega", c.field.dim_omega},
                {"dim_phi", c.field.dim_phi},         {"beta_min", c.field.beta_min}};
  j["render"] = {{"samples", t.render.samples},
                 {"background", t.render.background},
                 {"min_opacity", t.render.min_opacity}};
  j["loss"] = {{"lambda1_initial", t.loss.lambda1_initial}, {"lambda2", t.loss.lambda2},
               {"lambda_u", t.loss.lambda_u},               {"decay_interval", t.loss.decay_interval},
               {"decay_factor", t.loss.decay_factor},       {"entropy_ray_fraction", t.loss.entropy_ray_fraction}};
  j["train"] = {{"steps_per_iteration", t.steps},
                {"batch_rays", t.batch_rays},
                {"learning_rate", t.learning_rate},
                {"learning_rate_final", t.learning_rate_final},
                {"pseudo_ray_fraction", t.pseudo_ray_fraction},
                {"gradient_chunks", t.gradient_chunks},
                {"log_every", t.log_every}};
  const SelfTrainingSettings &s = c.self_training;
  j["self_training"] = {{"max_iterations", s.max_iterations},
                        {"convergence_eps", s.convergence_eps},
                        {"unseen_pose_multiplier", s.unseen_pose_multiplier},
                        {"pose_policy", to_string(s.pose_policy)},
                        {"warm_start", s.warm_start},
                        {"use_warped", s.use_warped},
                        {"use_predicted", s.use_predicted}};
  return j;
}

const char *type_name(const ordered_json &v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_object()) return "object";
  return v.type_name();
}

bool compatible(const ordered_json &schema, const ordered_json &value) {
  if (schema.is_object()) return value.is_object();
  if (schema.is_boolean()) return value.is_boolean();
  if (schema.is_string()) return value.is_string();
  if (schema.is_number_integer()) return value.is_number_integer();
  if (schema.is_number()) return value.is_number();
  return false;
}

void merge_strict(ordered_json &base, const ordered_json &patch, const std::string &prefix,
                  const std::string &origin) {
  if (!patch.is_object()) throw ConfigError(origin + ": top level must be an object");
  for (const auto &[key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError(origin + ": unknown config key '" + path + "'");
    ordered_json &slot = base[key];
    if (!compatible(slot, value))
      throw ConfigError(origin + ": config key '" + path + "' expects " + type_name(slot) + ", got " +
                        type_name(value));
    if (slot.is_object())
      merge_strict(slot, value, path, origin);
    else if (slot.is_number_unsigned() && value.is_number_integer() && !value.is_number_unsigned())
      throw ConfigError(origin + ": config key '" + path + "' must be non-negative");
    else if (slot.is_number_float())
      slot = value.get<double>();
    else
      slot = value;
  }
}

AppConfig from_json(const ordered_json &j) {
  AppConfig c;
  c.name = j["name"].get<std::string>();
  c.seed = j["seed"].get<std::uint64_t>();
  c.threads = j["threads"].get<int>();
  const auto &sc = j["scene"];
  c.scene.path = sc["path"].get<std::string>();
  c.scene.train_split = sc["train_split"].get<std::string>();
  c.scene.few_shot = sc["few_shot"].get<int>();
  c.scene.few_shot_seed = sc["few_shot_seed"].get<std::uint64_t>();
  c.scene.validation_split = sc["validation_split"].get<std::string>();
  c.scene.validation_count = sc["validation_count"].get<int>();
  c.scene.test_split = sc["test_split"].get<std::string>();
  c.scene.near = sc["near"].get<Real>();
  c.scene.far = sc["far"].get<Real>();
  const auto &en = j["encoding"];
  c.field.encoding.pos_frequencies = en["pos_frequencies"].get<int>();
  c.field.encoding.dir_frequencies = en["dir_frequencies"].get<int>();
  c.field.encoding.include_input = en["include_input"].get<bool>();
  const auto &f = j["field"];
  c.field.trunk_depth = f["trunk_depth"].get<int>();
  c.field.trunk_width = f["trunk_width"].get<int>();
  c.field.head_width = f["head_width"].get<int>();
  c.field.dim_omega = f["dim_omega"].get<int>();
  c.field.dim_phi = f["dim_phi"].get<int>();
  c.field.beta_min = f["beta_min"].get<Real>();
  const auto &r = j["render"];
  c.train.render.samples = r["samples"].get<int>();
  c.train.render.background = r["background"].get<Real>();
  c.train.render.min_opacity = r["min_opacity"].get<Real>();
  const auto &l = j["loss"];
  c.train.loss.lambda1_initial = l["lambda1_initial"].get<Real>();
  c.train.loss.lambda2 = l["lambda2"].get<Real>();
  c.train.loss.lambda_u = l["lambda_u"].get<Real>();
  c.train.loss.decay_interval = l["decay_interval"].get<std::int64_t>();
  c.train.loss.decay_factor = l["decay_factor"].get<Real>();
  c.train.loss.entropy_ray_fraction = l["entropy_ray_fraction"].get<Real>();
  const auto &t = j["train"];
  c.train.steps = t["steps_per_iteration"].get<int>();
  c.train.batch_rays = t["batch_rays"].get<int>();
  c.train.learning_rate = t["learning_rate"].get<Real>();
  c.train.learning_rate_final = t["learning_rate_final"].get<Real>();
  c.train.pseudo_ray_fraction = t["pseudo_ray_fraction"].get<Real>();
  c.train.gradient_chunks = t["gradient_chunks"].get<int>();
  c.train.log_every = t["log_every"].get<int>();
  const auto &s = j["self_training"];
  c.self_training.max_iterations = s["max_iterations"].get<int>();
  c.self_training.convergence_eps = s["convergence_eps"].get<Real>();
  c.self_training.unseen_pose_multiplier = s["unseen_pose_multiplier"].get<Real>();
  try {
    c.self_training.pose_policy = parse_pose_policy(s["pose_policy"].get<std::string>());
  } catch (const std::invalid_argument &e) {
    throw ConfigError(std::string("self_training.pose_policy: ") + e.what());
  }
  c.self_training.warm_start = s["warm_start"].get<bool>();
  c.self_training.use_warped = s["use_warped"].get<bool>();
  c.self_training.use_predicted = s["use_predicted"].get<bool>();
  c.train.seed = c.seed;
  c.train.threads = c.threads;
  return c;
}

AppConfig finish(const ordered_json &merged, const std::string &origin) {
  AppConfig c = from_json(merged);
  try {
    c.validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

} // namespace

void AppConfig::validate() const {
  auto require = [](bool ok, const std::string &msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(!name.empty() && name.find('/') == std::string::npos, "name must be a non-empty single path component");
  require(threads >= 0, "threads must be >= 0");
  require(scene.few_shot >= 1, "scene.few_shot must be >= 1");
  require(scene.validation_count >= 0, "scene.validation_count must be >= 0");
  require(scene.near > 0.0 && scene.near < scene.far, "scene.near/scene.far must satisfy 0 < near < far");
  require(self_training.max_iterations >= 1, "self_training.max_iterations must be >= 1");
  require(self_training.convergence_eps >= 0.0, "self_training.convergence_eps must be >= 0");
  require(self_training.unseen_pose_multiplier > 0.0, "self_training.unseen_pose_multiplier must be > 0");
  require(train.steps >= 1, "train.steps_per_iteration must be >= 1");
  require(train.render.min_opacity >= 0.0 && train.render.min_opacity <= 1.0,
          "render.min_opacity must lie in [0, 1]");
  field.validate();
  train.validate();
}

std::string config_to_json(const AppConfig &cfg) { return to_json(cfg).dump(2); }

AppConfig config_from_json(const std::string &text, const std::string &origin) {
  ordered_json patch;
  try {
    patch = ordered_json::parse(text);
  } catch (const ordered_json::parse_error &e) {
    throw ConfigError(origin + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  ordered_json merged = to_json(AppConfig{});
  merge_strict(merged, patch, "", origin);
  return finish(merged, origin);
}

AppConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str(), path.string());
}

void apply_override(AppConfig &cfg, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must have the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const ordered_json::parse_error &) {
    value = raw;
  }
  ordered_json patch = value;
  for (std::size_t end = key.size(); end != std::string::npos;) {
    const auto dot = key.rfind('.', end - 1);
    const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                        end - (dot == std::string::npos ? 0 : dot + 1));
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    patch = ordered_json{{part, patch}};
    end = dot;
  }
  ordered_json merged = to_json(cfg);
  merge_strict(merged, patch, "", "--set " + key);
  cfg = finish(merged, "--set " + key);
}

} // namespace selfnerf
