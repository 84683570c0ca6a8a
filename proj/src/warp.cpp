#include "selfnerf/warp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace selfnerf {
namespace {

Mat3 checked_inverse(const Mat3 &K) {
  const Real det = K.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12)
    throw std::domain_error("forward_warp: intrinsic matrix is not invertible");
  return K.inverse();
}

} // namespace

Vec3 warp_point(const Mat3 &K_src, const Mat3 &K_dst, const Mat4 &T_src_to_dst, const Vec2 &pixel,
                Real z_depth) {
  const Vec3 ray = checked_inverse(K_src) * Vec3(pixel.x(), pixel.y(), 1.0);
  const Vec4 p_src = (Vec4() << z_depth * ray, 1.0).finished();
  const Vec4 p_dst = T_src_to_dst * p_src;
  const Vec3 proj = K_dst * p_dst.head<3>();
  return {proj.x() / proj.z(), proj.y() / proj.z(), p_dst.z()};
}

Mat4 relative_transform(const Camera &src, const Camera &dst) {
  Mat4 flip = Mat4::Identity();
  flip.topLeftCorner<3, 3>() = gl_to_cv();
  return flip * dst.camera_from_world() * src.world_from_camera() * flip;
}

WarpedView forward_warp(const Image &source, const DepthMap &source_depth, const Camera &source_cam,
                        const Camera &target_cam, int source_id) {
  if (source.width != source_depth.width || source.height != source_depth.height ||
      source.width != source_cam.width || source.height != source_cam.height)
    throw std::domain_error("forward_warp: source image, depth and camera sizes differ");

  const Mat3 K_src_inv = checked_inverse(source_cam.K);
  checked_inverse(target_cam.K);
  const Mat4 T = relative_transform(source_cam, target_cam);
  const Mat3 R = T.topLeftCorner<3, 3>();
  const Vec3 t = T.topRightCorner<3, 1>();

  WarpedView out;
  out.target = target_cam;
  out.source_id = source_id;
  out.color = Image(target_cam.width, target_cam.height, 0.0);
  out.mask.assign(out.color.pixel_count(), 0);
  out.zbuffer.assign(out.color.pixel_count(), std::numeric_limits<Real>::infinity());

  for (int y = 0; y < source.height; ++y) {
    for (int x = 0; x < source.width; ++x) {
      const std::size_t si = source_depth.index(x, y);
      if (!source_depth.valid[si]) continue;
      const Vec3 ray = K_src_inv * Vec3(x + 0.5, y + 0.5, 1.0);
      // ray distance along the unit direction -> z-depth
      const Real z = source_depth.depth[si] / ray.norm();
      const Vec3 p = R * (z * ray) + t;
      if (!(p.z() > 0.0)) continue;
      const Vec3 proj = target_cam.K * p;
      const Real u = proj.x() / proj.z();
      const Real v = proj.y() / proj.z();
      if (!(u >= 0.0 && v >= 0.0 && u < target_cam.width && v < target_cam.height)) continue;
      const int tx = static_cast<int>(std::floor(u));
      const int ty = static_cast<int>(std::floor(v));
      const std::size_t ti = out.color.index(tx, ty);
      if (p.z() < out.zbuffer[ti]) {
        out.zbuffer[ti] = p.z();
        out.mask[ti] = 1;
        out.color.set(tx, ty, source.at(x, y));
      }
    }
  }
  return out;
}

void merge_nearest(WarpedView &into, const WarpedView &other) {
  if (!into.color.same_shape(other.color))
    throw std::domain_error("merge_nearest: warped views differ in size");
  for (std::size_t i = 0; i < into.mask.size(); ++i) {
    if (!other.mask[i] || other.zbuffer[i] >= into.zbuffer[i]) continue;
    into.zbuffer[i] = other.zbuffer[i];
    into.mask[i] = 1;
    for (int c = 0; c < 3; ++c) into.color.data[3 * i + c] = other.color.data[3 * i + c];
  }
  if (into.source_id != other.source_id) into.source_id = -1;
}

} // namespace selfnerf
