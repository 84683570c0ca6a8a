#include "selfnerf/pseudo_views.hpp"

#include "selfnerf/rng.hpp"

#include "json.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace selfnerf {
namespace {

using nlohmann::json;

bool duplicates_any(const Camera &cam, const std::vector<Camera> &seen) {
  for (const Camera &s : seen)
    if (same_pose(cam, s)) return true;
  return false;
}

json matrix_json(const Eigen::MatrixXd &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <int R, int C>
Eigen::Matrix<Real, R, C> matrix_from_json(const json &j) {
  Eigen::Matrix<Real, R, C> m;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) m(r, c) = j.at(r).at(c).get<Real>();
  return m;
}

} // namespace

std::string to_string(PosePolicy policy) { return policy == PosePolicy::Interpolate ? "interpolate" : "hemisphere"; }

PosePolicy parse_pose_policy(const std::string &text) {
  if (text == "interpolate") return PosePolicy::Interpolate;
  if (text == "hemisphere") return PosePolicy::Hemisphere;
  throw std::invalid_argument("unknown pose policy '" + text + "' (expected interpolate or hemisphere)");
}

Camera interpolate_pose(const Camera &a, const Camera &b, Real t) {
  const Eigen::Quaterniond qa(a.rotation), qb(b.rotation);
  Camera out = a;
  out.rotation = qa.slerp(t, qb).normalized().toRotationMatrix();
  out.translation = (1.0 - t) * a.translation + t * b.translation;
  return out;
}

bool same_pose(const Camera &a, const Camera &b, Real tol) {
  return (a.translation - b.translation).norm() <= tol && (a.rotation - b.rotation).norm() <= tol;
}

Vec3 optical_axes_centroid(const std::vector<Camera> &cameras) {
  // minimise sum_i |(I - d_i d_i^T)(x - o_i)|^2
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const Camera &c : cameras) {
    const Vec3 d = c.optical_axis().normalized();
    const Mat3 P = Mat3::Identity() - d * d.transpose();
    A += P;
    b += P * c.center();
  }
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(1e-9);
  return svd.solve(b);
}

UnseenPoseSet sample_unseen_poses(const std::vector<Camera> &seen, int count, PosePolicy policy,
                                  std::uint64_t seed) {
  if (count < 1) throw std::domain_error("unseen pose count must be >= 1");
  if (seen.empty()) throw std::domain_error("unseen poses need at least one seen camera");
  if (policy == PosePolicy::Interpolate && seen.size() < 2)
    throw std::domain_error("pose interpolation needs at least two seen cameras");

  Rng rng(seed);
  UnseenPoseSet set;
  set.policy = policy;
  const int max_attempts = 1000 * count;
  int attempts = 0;

  if (policy == PosePolicy::Interpolate) {
    while (int(set.cameras.size()) < count) {
      if (++attempts > max_attempts) throw std::domain_error("could not draw distinct interpolated poses");
      const std::size_t i = rng.index(seen.size());
      std::size_t j = rng.index(seen.size() - 1);
      if (j >= i) ++j;
      const Camera cam = interpolate_pose(seen[i], seen[j], rng.uniform());
      if (!duplicates_any(cam, seen)) set.cameras.push_back(cam);
    }
    return set;
  }

  const Vec3 centre = optical_axes_centroid(seen);
  Vec3 up = Vec3::Zero();
  Real radius = 0.0;
  for (const Camera &c : seen) {
    up += c.rotation.col(1);
    radius += (c.center() - centre).norm();
  }
  radius /= Real(seen.size());
  if (up.norm() < 1e-9) up = seen.front().rotation.col(1);
  up.normalize();

  Real min_elev = std::numbers::pi / 2, max_elev = 0.0;
  for (const Camera &c : seen) {
    const Real s = std::clamp((c.center() - centre).normalized().dot(up), -1.0, 1.0);
    const Real elev = std::clamp(std::asin(s), 0.0, std::numbers::pi / 2);
    min_elev = std::min(min_elev, elev);
    max_elev = std::max(max_elev, elev);
  }
  // in-plane basis orthogonal to `up`
  Vec3 e1 = up.unitOrthogonal();
  const Vec3 e2 = up.cross(e1);

  const Camera &ref = seen.front();
  while (int(set.cameras.size()) < count) {
    if (++attempts > max_attempts) throw std::domain_error("could not draw distinct hemisphere poses");
    const Real azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Real elev = rng.uniform(min_elev, max_elev);
    const Vec3 dir = std::cos(elev) * (std::cos(azimuth) * e1 + std::sin(azimuth) * e2) + std::sin(elev) * up;
    const Camera cam =
        look_at(centre + radius * dir, centre, up, ref.K, ref.width, ref.height, ref.near, ref.far);
    if (!duplicates_any(cam, seen)) set.cameras.push_back(cam);
  }
  return set;
}

std::vector<PseudoView> make_predicted_pseudo_views(const FieldParams &model, const UnseenPoseSet &poses,
                                                    const RenderSettings &settings, int source_iteration,
                                                    int first_phi, int threads) {
  std::vector<PseudoView> out;
  for (std::size_t k = 0; k < poses.cameras.size(); ++k) {
    const Camera &cam = poses.cameras[k];
    PseudoView pv;
    pv.camera = cam;
    pv.image = render_image(model, cam, settings, threads).color;
    pv.mask.assign(pv.image.pixel_count(), 1);
    pv.provenance = Provenance::Predicted;
    pv.omega = WarpClass::Predicted;
    pv.source_iteration = source_iteration;
    pv.phi = first_phi + int(k);
    out.push_back(std::move(pv));
  }
  return out;
}

std::vector<DepthMap> render_depth_maps(const FieldParams &model, const std::vector<Camera> &cameras,
                                        const RenderSettings &settings, int threads) {
  std::vector<DepthMap> out;
  for (const Camera &cam : cameras) out.push_back(render_image(model, cam, settings, threads).depth);
  return out;
}

std::vector<WarpedView> warp_seen_views(const std::vector<View> &seen, const std::vector<DepthMap> &depths,
                                        const UnseenPoseSet &poses) {
  if (depths.size() != seen.size()) throw std::domain_error("one depth map per seen view is required");
  std::vector<WarpedView> out;
  for (const Camera &target : poses.cameras) {
    WarpedView merged;
    for (std::size_t i = 0; i < seen.size(); ++i) {
      WarpedView w = forward_warp(seen[i].image, depths[i], seen[i].camera, target, int(i));
      if (i == 0)
        merged = std::move(w);
      else
        merge_nearest(merged, w);
    }
    out.push_back(std::move(merged));
  }
  return out;
}

std::vector<PseudoView> make_warped_pseudo_views(const FieldParams &model, const std::vector<View> &seen,
                                                 const UnseenPoseSet &poses, const RenderSettings &settings,
                                                 int source_iteration, int first_phi, int threads) {
  std::vector<Camera> cams;
  for (const View &v : seen) cams.push_back(v.camera);
  const std::vector<WarpedView> warped = warp_seen_views(seen, render_depth_maps(model, cams, settings, threads), poses);
  std::vector<PseudoView> out;
  for (std::size_t k = 0; k < warped.size(); ++k) {
    PseudoView pv;
    pv.camera = warped[k].target;
    pv.image = warped[k].color;
    pv.mask = warped[k].mask;
    pv.provenance = Provenance::Warped;
    pv.omega = WarpClass::SeenOrWarped;
    pv.source_iteration = source_iteration;
    pv.phi = first_phi + int(k);
    out.push_back(std::move(pv));
  }
  return out;
}

void save_pseudo_views(const std::filesystem::path &dir, const std::vector<PseudoView> &views) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["views"] = json::array();
  for (std::size_t k = 0; k < views.size(); ++k) {
    const PseudoView &pv = views[k];
    const std::string stem = (pv.provenance == Provenance::Warped ? "warped_" : "predicted_") + std::to_string(k);
    write_png(dir / (stem + ".png"), pv.image);
    write_png_mask(dir / (stem + "_mask.png"), pv.mask, pv.image.width, pv.image.height);
    manifest["views"].push_back({
        {"image", stem + ".png"},
        {"mask", stem + "_mask.png"},
        {"provenance", pv.provenance == Provenance::Warped ? "warped" : "predicted"},
        {"source_iteration", pv.source_iteration},
        {"phi", pv.phi},
        {"omega", int(pv.omega)},
        {"width", pv.camera.width},
        {"height", pv.camera.height},
        {"near", pv.camera.near},
        {"far", pv.camera.far},
        {"intrinsics", matrix_json(pv.camera.K)},
        {"transform_matrix", matrix_json(pv.camera.world_from_camera())},
    });
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error((dir / "manifest.json").string() + ": write failed");
}

std::vector<PseudoView> load_pseudo_views(const std::filesystem::path &dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception &e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  std::vector<PseudoView> out;
  for (const json &e : manifest.at("views")) {
    PseudoView pv;
    pv.camera.width = e.at("width").get<int>();
    pv.camera.height = e.at("height").get<int>();
    pv.camera.near = e.at("near").get<Real>();
    pv.camera.far = e.at("far").get<Real>();
    pv.camera.K = matrix_from_json<3, 3>(e.at("intrinsics"));
    const Mat4 T = matrix_from_json<4, 4>(e.at("transform_matrix"));
    pv.camera.rotation = T.topLeftCorner<3, 3>();
    pv.camera.translation = T.topRightCorner<3, 1>();
    pv.provenance = e.at("provenance").get<std::string>() == "warped" ? Provenance::Warped : Provenance::Predicted;
    pv.source_iteration = e.at("source_iteration").get<int>();
    pv.phi = e.at("phi").get<int>();
    pv.omega = WarpClass(e.at("omega").get<int>());
    pv.image = read_png(dir / e.at("image").get<std::string>()).rgb;
    const LoadedPng mask = read_png(dir / e.at("mask").get<std::string>());
    pv.mask.resize(mask.rgb.pixel_count());
    for (std::size_t p = 0; p < pv.mask.size(); ++p) pv.mask[p] = mask.rgb.data[3 * p] > 0.5 ? 1 : 0;
    out.push_back(std::move(pv));
  }
  return out;
}

} // namespace selfnerf
