#include "selfnerf/camera.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace selfnerf {

void Camera::validate() const {
  if (width < 1 || height < 1)
    throw std::domain_error("camera: width and height must be >= 1");
  if (!(near < far))
    throw std::domain_error("camera: near must be < far");
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(2, 2) != 1.0)
    throw std::domain_error("camera: K must be upper-triangular with K(2,2) = 1");
  if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0))
    throw std::domain_error("camera: focal lengths must be positive");
  const Real ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-6))
    throw std::domain_error("camera: rotation is not orthonormal (deviation " + std::to_string(ortho) + ")");
}

Mat4 Camera::world_from_camera() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Mat4 Camera::camera_from_world() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.transpose();
  m.topRightCorner<3, 1>() = -rotation.transpose() * translation;
  return m;
}

Mat3 make_intrinsics(Real focal, int width, int height) {
  Mat3 K = Mat3::Identity();
  K(0, 0) = focal;
  K(1, 1) = focal;
  K(0, 2) = 0.5 * width;
  K(1, 2) = 0.5 * height;
  return K;
}

Camera look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up, const Mat3 &K, int width, int height,
               Real near, Real far) {
  const Vec3 back = (eye - target).normalized(); // camera +z
  Vec3 right = up.cross(back);
  if (right.norm() < 1e-9) {
    // looking along `up`; any perpendicular will do
    right = (std::abs(back.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(back);
  }
  right.normalize();
  const Vec3 cam_up = back.cross(right);

  Camera cam;
  cam.K = K;
  cam.rotation.col(0) = right;
  cam.rotation.col(1) = cam_up;
  cam.rotation.col(2) = back;
  cam.translation = eye;
  cam.width = width;
  cam.height = height;
  cam.near = near;
  cam.far = far;
  return cam;
}

Ray generate_ray(const Camera &camera, Real u, Real v) {
  if (!(u >= 0.0 && u < camera.width && v >= 0.0 && v < camera.height))
    throw std::domain_error("generate_ray: pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") outside image");
  const Vec3 cv = camera.K.triangularView<Eigen::Upper>().solve(Vec3(u, v, 1.0));
  const Vec3 dir_cam = gl_to_cv() * cv;

  Ray ray;
  ray.origin = camera.translation;
  ray.direction = (camera.rotation * dir_cam).normalized();
  // Cone whose cross-section variance matches the pixel footprint's.
  ray.pixel_radius = 2.0 / (std::sqrt(12.0) * camera.focal_x());
  return ray;
}

} // namespace selfnerf
