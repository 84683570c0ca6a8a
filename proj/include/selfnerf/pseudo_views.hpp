#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/dataset.hpp"
#include "selfnerf/field.hpp"
#include "selfnerf/image.hpp"
#include "selfnerf/renderer.hpp"
#include "selfnerf/warp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace selfnerf {

enum class PosePolicy { Interpolate, Hemisphere };

std::string to_string(PosePolicy policy);
/// Accepts "interpolate" / "hemisphere"; throws std::invalid_argument otherwise.
PosePolicy parse_pose_policy(const std::string &text);

struct UnseenPoseSet {
  std::vector<Camera> cameras;
  PosePolicy policy = PosePolicy::Hemisphere;
};

/// Rotation slerp and centre lerp; intrinsics, size and bounds come from `a`.
Camera interpolate_pose(const Camera &a, const Camera &b, Real t);

/// True when the two cameras share a centre and orientation (to `tol`).
bool same_pose(const Camera &a, const Camera &b, Real tol = 1e-6);

/// Least-squares point closest to every optical axis.
Vec3 optical_axes_centroid(const std::vector<Camera> &cameras);

/// INTERPOLATE: random pairs of seen poses, random t. HEMISPHERE: poses on
/// the sphere through the seen cameras (centre = optical_axes_centroid,
/// radius = mean distance) within the seen elevation band around the mean
/// camera up vector, all looking at the centre. Poses equal to a seen pose
/// are rejected and redrawn. Throws std::domain_error for count < 1, no
/// cameras, or INTERPOLATE with fewer than two cameras.
UnseenPoseSet sample_unseen_poses(const std::vector<Camera> &seen, int count, PosePolicy policy,
                                  std::uint64_t seed);

enum class Provenance { Warped, Predicted };

struct PseudoView {
  Camera camera;
  Image image;
  Mask mask;
  Provenance provenance = Provenance::Predicted;
  int source_iteration = 0;
  int phi = 0;
  WarpClass omega = WarpClass::Predicted;
};

/// C^r renders of every pose, full masks, consecutive phi ids from `first_phi`.
std::vector<PseudoView> make_predicted_pseudo_views(const FieldParams &model, const UnseenPoseSet &poses,
                                                    const RenderSettings &settings, int source_iteration,
                                                    int first_phi, int threads = 1);

/// Model depth for each camera; pixels below settings.min_opacity are invalid.
std::vector<DepthMap> render_depth_maps(const FieldParams &model, const std::vector<Camera> &cameras,
                                        const RenderSettings &settings, int threads = 1);

/// Forward-warps every seen view into each pose and merges sources by
/// nearest depth. depths[i] belongs to seen[i].
std::vector<WarpedView> warp_seen_views(const std::vector<View> &seen, const std::vector<DepthMap> &depths,
                                        const UnseenPoseSet &poses);

std::vector<PseudoView> make_warped_pseudo_views(const FieldParams &model, const std::vector<View> &seen,
                                                 const UnseenPoseSet &poses, const RenderSettings &settings,
                                                 int source_iteration, int first_phi, int threads = 1);

/// Writes <dir>/<k>.png, <k>_mask.png and manifest.json (poses, provenance, ids).
void save_pseudo_views(const std::filesystem::path &dir, const std::vector<PseudoView> &views);
std::vector<PseudoView> load_pseudo_views(const std::filesystem::path &dir);

} // namespace selfnerf
