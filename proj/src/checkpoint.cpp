#include "selfnerf/checkpoint.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace selfnerf {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'N', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream &out, const T &v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

void put_doubles(std::ofstream &out, const std::vector<Real> &v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char *>(v.data()), std::streamsize(v.size() * sizeof(Real)));
}

template <typename T>
T get(std::ifstream &in, const std::filesystem::path &path) {
  T v{};
  if (!in.read(reinterpret_cast<char *>(&v), sizeof(T))) throw CheckpointError(path.string() + ": truncated");
  return v;
}

std::vector<Real> get_doubles(std::ifstream &in, const std::filesystem::path &path, std::size_t limit) {
  const auto n = get<std::uint64_t>(in, path);
  if (n > limit) throw CheckpointError(path.string() + ": corrupt array length");
  std::vector<Real> v(n);
  if (!in.read(reinterpret_cast<char *>(v.data()), std::streamsize(n * sizeof(Real))))
    throw CheckpointError(path.string() + ": truncated");
  return v;
}

} // namespace

std::string field_config_to_json(const FieldConfig &cfg) {
  nlohmann::ordered_json j;
  j["encoding"] = {{"pos_frequencies", cfg.encoding.pos_frequencies},
                   {"dir_frequencies", cfg.encoding.dir_frequencies},
                   {"include_input", cfg.encoding.include_input}};
  j["trunk_depth"] = cfg.trunk_depth;
  j["trunk_width"] = cfg.trunk_width;
  j["head_width"] = cfg.head_width;
  j["dim_omega"] = cfg.dim_omega;
  j["dim_phi"] = cfg.dim_phi;
  j["num_images"] = cfg.num_images;
  j["beta_min"] = cfg.beta_min;
  return j.dump();
}

FieldConfig field_config_from_json(const std::string &text) {
  const auto j = nlohmann::json::parse(text);
  FieldConfig cfg;
  const auto &e = j.at("encoding");
  cfg.encoding.pos_frequencies = e.at("pos_frequencies").get<int>();
  cfg.encoding.dir_frequencies = e.at("dir_frequencies").get<int>();
  cfg.encoding.include_input = e.at("include_input").get<bool>();
  cfg.trunk_depth = j.at("trunk_depth").get<int>();
  cfg.trunk_width = j.at("trunk_width").get<int>();
  cfg.head_width = j.at("head_width").get<int>();
  cfg.dim_omega = j.at("dim_omega").get<int>();
  cfg.dim_phi = j.at("dim_phi").get<int>();
  cfg.num_images = j.at("num_images").get<int>();
  cfg.beta_min = j.at("beta_min").get<Real>();
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::filesystem::path &path, const FieldParams &params, const AdamState &adam) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(path.string() + ": cannot open for writing");
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  const std::string cfg = field_config_to_json(params.config());
  put<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), std::streamsize(cfg.size()));
  put_doubles(out, params.values);
  put<std::uint64_t>(out, adam.step);
  put_doubles(out, adam.m);
  put_doubles(out, adam.v);
  if (!out) throw CheckpointError(path.string() + ": write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(path.string() + ": cannot open");
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw CheckpointError(path.string() + ": not a checkpoint file");
  if (const auto version = get<std::uint32_t>(in, path); version != kVersion)
    throw CheckpointError(path.string() + ": unsupported version " + std::to_string(version));
  const auto n = get<std::uint64_t>(in, path);
  if (n > (1u << 20)) throw CheckpointError(path.string() + ": corrupt header");
  std::string text(n, '\0');
  if (!in.read(text.data(), std::streamsize(n))) throw CheckpointError(path.string() + ": truncated");

  FieldConfig cfg;
  try {
    cfg = field_config_from_json(text);
  } catch (const std::exception &e) {
    throw CheckpointError(path.string() + ": bad field config: " + e.what());
  }
  Checkpoint ck{FieldParams(cfg), AdamState()};
  const std::size_t expected = ck.params.size();
  auto values = get_doubles(in, path, expected);
  if (values.size() != expected) throw CheckpointError(path.string() + ": parameter count mismatch");
  ck.params.values = std::move(values);
  ck.adam.step = get<std::uint64_t>(in, path);
  ck.adam.m = get_doubles(in, path, expected);
  ck.adam.v = get_doubles(in, path, expected);
  if (ck.adam.m.size() != ck.adam.v.size() || (!ck.adam.m.empty() && ck.adam.m.size() != expected))
    throw CheckpointError(path.string() + ": optimizer state mismatch");
  return ck;
}

} // namespace selfnerf
