#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/image.hpp"

namespace selfnerf {

struct WarpedView {
  Image color;
  Mask mask;                 // 1 where a source pixel landed
  std::vector<Real> zbuffer; // target-frame z-depth of the winning splat
  int source_id = -1;        // -1 once several sources have been merged
  Camera target;
};

/// p_j = K_j T_ij (K_i^-1 d_i p_i), all in the vision frame.
/// Returns (u_j, v_j, z_j) where z_j is the target z-depth.
Vec3 warp_point(const Mat3 &K_src, const Mat3 &K_dst, const Mat4 &T_src_to_dst, const Vec2 &pixel,
                Real z_depth);

/// Rigid transform from the source vision frame to the target vision frame.
Mat4 relative_transform(const Camera &src, const Camera &dst);

/// Splats every valid source pixel to its nearest target pixel; a z-buffer
/// keeps the closest sample, unhit pixels stay masked. Depth map values are
/// ray distances (unit directions) and are converted to z-depth internally.
/// Throws std::domain_error for a non-invertible K or mismatched sizes.
WarpedView forward_warp(const Image &source, const DepthMap &source_depth, const Camera &source_cam,
                        const Camera &target_cam, int source_id = 0);

/// Nearest-depth merge of `other` into `into` (same target camera).
void merge_nearest(WarpedView &into, const WarpedView &other);

} // namespace selfnerf
