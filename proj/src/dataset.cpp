#include "selfnerf/dataset.hpp"

#include "selfnerf/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace selfnerf {
namespace {

using nlohmann::json;

std::string location(const std::string &text, std::size_t byte) {
  const std::size_t upto = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
  const auto last_nl = text.rfind('\n', upto == 0 ? 0 : upto - 1);
  const std::size_t column = last_nl == std::string::npos ? upto + 1 : upto - last_nl;
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

Mat4 parse_matrix(const json &m, const std::string &where) {
  if (!m.is_array() || m.size() != 4) throw DatasetError(where + ": transform_matrix must have 4 rows");
  Mat4 out;
  for (int r = 0; r < 4; ++r) {
    if (!m[r].is_array() || m[r].size() != 4)
      throw DatasetError(where + ": transform_matrix row " + std::to_string(r) + " must have 4 entries");
    for (int c = 0; c < 4; ++c) {
      if (!m[r][c].is_number()) throw DatasetError(where + ": transform_matrix entries must be numbers");
      out(r, c) = m[r][c].get<Real>();
    }
  }
  return out;
}

} // namespace

Real focal_from_fov(Real camera_angle_x, int width) { return 0.5 * width / std::tan(0.5 * camera_angle_x); }
Real fov_from_focal(Real focal, int width) { return 2.0 * std::atan(0.5 * width / focal); }

SceneDataset load_nerf_synthetic(const std::filesystem::path &dir, const std::string &split, Real near, Real far,
                                 Real background) {
  const auto json_path = dir / ("transforms_" + split + ".json");
  std::ifstream in(json_path);
  if (!in) throw DatasetError(json_path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw DatasetError(json_path.string() + ": " + location(text, e.byte) + ": malformed JSON");
  }
  const std::string file = json_path.string();
  if (!doc.is_object() || !doc.contains("camera_angle_x") || !doc["camera_angle_x"].is_number())
    throw DatasetError(file + ": missing numeric 'camera_angle_x'");
  if (!doc.contains("frames") || !doc["frames"].is_array()) throw DatasetError(file + ": missing 'frames' array");

  SceneDataset ds;
  ds.name = dir.filename().string();
  if (ds.name.empty()) ds.name = dir.parent_path().filename().string();
  ds.split = split;
  ds.near = near;
  ds.far = far;

  const Real angle = doc["camera_angle_x"].get<Real>();
  std::size_t index = 0;
  for (const auto &frame : doc["frames"]) {
    const std::string where = file + ": frames[" + std::to_string(index++) + "]";
    if (!frame.is_object() || !frame.contains("file_path") || !frame["file_path"].is_string())
      throw DatasetError(where + ": missing 'file_path'");
    if (!frame.contains("transform_matrix")) throw DatasetError(where + ": missing 'transform_matrix'");
    const Mat4 pose = parse_matrix(frame["transform_matrix"], where);

    std::string rel = frame["file_path"].get<std::string>();
    std::filesystem::path img_path = dir / rel;
    if (img_path.extension() != ".png") img_path += ".png";
    if (!std::filesystem::exists(img_path))
      throw DatasetError(where + ": image '" + img_path.string() + "' not found for frame '" + rel + "'");
    LoadedPng png = read_png(img_path);

    View v;
    v.name = rel;
    v.image = std::move(png.rgb);
    if (!png.alpha.empty()) {
      for (std::size_t p = 0; p < png.alpha.size(); ++p)
        for (int c = 0; c < 3; ++c) {
          Real &x = v.image.data[3 * p + c];
          x = x * png.alpha[p] + background * (1.0 - png.alpha[p]);
        }
    }
    v.camera.width = v.image.width;
    v.camera.height = v.image.height;
    v.camera.K = make_intrinsics(focal_from_fov(angle, v.image.width), v.image.width, v.image.height);
    v.camera.rotation = pose.topLeftCorner<3, 3>();
    v.camera.translation = pose.topRightCorner<3, 1>();
    v.camera.near = near;
    v.camera.far = far;
    try {
      v.camera.validate();
    } catch (const std::domain_error &e) {
      throw DatasetError(where + ": " + e.what());
    }
    if (!ds.views.empty() && !ds.views.front().image.same_shape(v.image))
      throw DatasetError(where + ": image size differs from the rest of the split");
    ds.views.push_back(std::move(v));
  }
  return ds;
}

void write_nerf_synthetic(const std::filesystem::path &dir, const std::string &split,
                          const std::vector<View> &views) {
  std::filesystem::create_directories(dir / split);
  json doc;
  doc["camera_angle_x"] = views.empty() ? 0.6911112 : fov_from_focal(views.front().camera.focal_x(), views.front().camera.width);
  doc["frames"] = json::array();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const View &v = views[i];
    const std::string rel = "./" + split + "/r_" + std::to_string(i);
    write_png(dir / split / ("r_" + std::to_string(i) + ".png"), v.image);
    const Mat4 m = v.camera.world_from_camera();
    json mat = json::array();
    for (int r = 0; r < 4; ++r) mat.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    doc["frames"].push_back({{"file_path", rel}, {"transform_matrix", mat}});
  }
  std::ofstream out(dir / ("transforms_" + split + ".json"));
  if (!out) throw DatasetError((dir / ("transforms_" + split + ".json")).string() + ": cannot write");
  out << doc.dump(2) << '\n';
}

SceneDataset select_few_shot(const SceneDataset &dataset, std::size_t k, std::uint64_t seed) {
  const std::size_t n = dataset.views.size();
  if (k > n) throw std::domain_error("select_few_shot: k exceeds the dataset size");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::vector<std::uint8_t> chosen(n, 0);
  for (std::size_t i = 0; i < k; ++i) chosen[order[i]] = 1;

  SceneDataset out;
  out.name = dataset.name;
  out.split = dataset.split;
  out.near = dataset.near;
  out.far = dataset.far;
  for (std::size_t i = 0; i < n; ++i) (chosen[i] ? out.views : out.held_out).push_back(dataset.views[i]);
  out.held_out.insert(out.held_out.end(), dataset.held_out.begin(), dataset.held_out.end());
  return out;
}

} // namespace selfnerf
