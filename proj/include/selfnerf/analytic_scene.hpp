#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/image.hpp"

#include <variant>
#include <vector>

namespace selfnerf {

/// Constant density and colour filling every ray's [near, far] segment.
struct HomogeneousMedium {
  Real sigma = 1.0;
  Rgb color = Rgb::Ones();
};

/// Axis-aligned emissive/absorptive box. Colour varies linearly with
/// position: color(x) = base + gradient * (x - centre), so every segment
/// still has a closed-form transport solution.
struct EmissiveBox {
  Vec3 lo = -Vec3::Ones();
  Vec3 hi = Vec3::Ones();
  Real sigma = 40.0;
  Rgb base = Rgb(0.8, 0.2, 0.2);
  Mat3 gradient = Mat3::Zero();

  Vec3 centre() const { return 0.5 * (lo + hi); }
  Rgb color_at(const Vec3 &x) const { return base + gradient * (x - centre()); }
};

struct BoxScene {
  std::vector<EmissiveBox> boxes;
};

/// Opaque plane with a smooth procedural texture.
struct TexturedPlane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u_axis = Vec3::UnitX(); // in-plane texture axis
  Real frequency = 1.0;        // radians per scene unit

  Rgb texture(const Vec3 &hit) const;
};

struct AnalyticScene {
  std::variant<HomogeneousMedium, BoxScene, TexturedPlane> medium;
  Real background = 0.0;
};

struct AnalyticSample {
  Rgb color = Rgb::Zero();
  Real depth = 0.0; // opacity-normalised expected ray distance
  bool has_surface = false;
  Real opacity = 0.0;
};

/// Closed-form transport along the ray restricted to [near, far].
AnalyticSample render_analytic(const AnalyticScene &scene, const Ray &ray, Real near, Real far,
                               Real min_opacity = 1e-10);
AnalyticSample render_analytic(const AnalyticScene &scene, const Camera &camera, const Vec2 &pixel,
                               Real min_opacity = 1e-10);

struct AnalyticImage {
  Image color;
  DepthMap depth;
  std::vector<Real> opacity;
};
AnalyticImage render_analytic_image(const AnalyticScene &scene, const Camera &camera, Real min_opacity = 0.5);

/// Three coloured, shaded boxes inside [-1, 1]^3 standing on a floor slab.
AnalyticScene make_box_scene(Real background = 1.0);

/// Cameras on a sphere of `radius` around the origin looking at it (z up),
/// at the given elevation band. Deterministic in `seed`.
std::vector<Camera> orbit_cameras(int count, Real radius, Real focal, int width, int height, Real near, Real far,
                                  Real min_elevation, Real max_elevation, std::uint64_t seed);

} // namespace selfnerf
