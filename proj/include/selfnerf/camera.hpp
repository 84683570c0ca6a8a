#pragma once

#include "selfnerf/types.hpp"

namespace selfnerf {

/// Pinhole camera.
///
/// World and camera frames are right-handed; the camera looks down its local
/// -z axis with +y up (the NeRF-synthetic / OpenGL convention). The intrinsic
/// matrix `K` is expressed in the usual vision convention (+x right, +y down,
/// +z forward) and maps to the camera frame through diag(1, -1, -1).
struct Camera {
  Mat3 K = Mat3::Identity();
  Mat3 rotation = Mat3::Identity(); // world-from-camera
  Vec3 translation = Vec3::Zero();  // camera centre in world
  int width = 1;
  int height = 1;
  Real near = 2.0;
  Real far = 6.0;

  /// Throws std::domain_error when an invariant is violated.
  void validate() const;

  Vec3 center() const { return translation; }
  /// Unit viewing direction (world -z of the camera frame).
  Vec3 optical_axis() const { return -rotation.col(2); }
  Real focal_x() const { return K(0, 0); }
  Real focal_y() const { return K(1, 1); }

  Mat4 world_from_camera() const;
  Mat4 camera_from_world() const;
};

/// Intrinsics with square pixels and the principal point at the image centre.
Mat3 make_intrinsics(Real focal, int width, int height);

/// Camera at `eye` whose optical axis passes through `target`.
Camera look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up, const Mat3 &K,
               int width, int height, Real near, Real far);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3(0, 0, -1);
  /// Cone radius at unit distance along `direction`.
  Real pixel_radius = 1e-3;
};

/// Back-projects continuous pixel coordinates (u right, v down; pixel centres
/// at integer + 0.5). Throws std::domain_error outside [0,width)x[0,height).
Ray generate_ray(const Camera &camera, Real u, Real v);

/// Ray through the centre of integer pixel (x, y).
inline Ray pixel_ray(const Camera &camera, int x, int y) {
  return generate_ray(camera, x + 0.5, y + 0.5);
}

/// Flips between the camera frame (-z forward, +y up) and the vision frame
/// (+z forward, +y down). Its own inverse.
inline Mat3 gl_to_cv() { return Vec3(1, -1, -1).asDiagonal(); }

} // namespace selfnerf
