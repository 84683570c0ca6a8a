#include "selfnerf/analytic_scene.hpp"

#include "selfnerf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace selfnerf {
namespace {

// Integral over s in [0, len] of sigma e^{-sigma s} (a + b s) ds.
Real linear_emission(Real sigma, Real len, Real a, Real b) {
  if (sigma <= 0.0) return 0.0;
  const Real e = std::exp(-sigma * len);
  const Real opacity = -std::expm1(-sigma * len);
  // integral of sigma s e^{-sigma s} = (1 - e (1 + sigma len)) / sigma
  const Real first_moment = (opacity - sigma * len * e) / sigma;
  return a * opacity + b * first_moment;
}

struct Accumulator {
  Rgb color = Rgb::Zero();
  Real depth_weighted = 0.0;
  Real transmittance = 1.0;

  // Segment [t0, t1] of constant density whose emitted colour is c0 + c1 (t - t0).
  void add(Real sigma, Real t0, Real t1, const Rgb &c0, const Rgb &c1) {
    const Real len = t1 - t0;
    if (len <= 0.0 || sigma <= 0.0) return;
    for (int c = 0; c < 3; ++c) color[c] += transmittance * linear_emission(sigma, len, c0[c], c1[c]);
    depth_weighted += transmittance * linear_emission(sigma, len, t0, 1.0);
    transmittance *= std::exp(-sigma * len);
  }

  AnalyticSample finish(Real background, Real min_opacity) const {
    AnalyticSample s;
    s.opacity = 1.0 - transmittance;
    s.color = color + Rgb::Constant(background * transmittance);
    if (s.opacity > 0.0 && s.opacity >= min_opacity) {
      s.depth = depth_weighted / s.opacity;
      s.has_surface = true;
    }
    return s;
  }
};

bool slab_interval(const EmissiveBox &box, const Ray &ray, Real &t_enter, Real &t_exit) {
  t_enter = -std::numeric_limits<Real>::infinity();
  t_exit = std::numeric_limits<Real>::infinity();
  for (int a = 0; a < 3; ++a) {
    const Real o = ray.origin[a];
    const Real d = ray.direction[a];
    if (std::abs(d) < 1e-15) {
      if (o < box.lo[a] || o > box.hi[a]) return false;
      continue;
    }
    Real t0 = (box.lo[a] - o) / d;
    Real t1 = (box.hi[a] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  return t_exit > t_enter;
}

AnalyticSample render_homogeneous(const HomogeneousMedium &m, Real background, Real near, Real far,
                                  Real min_opacity) {
  Accumulator acc;
  acc.add(m.sigma, near, far, m.color, Rgb::Zero());
  return acc.finish(background, min_opacity);
}

AnalyticSample render_boxes(const BoxScene &scene, const Ray &ray, Real background, Real near, Real far,
                            Real min_opacity) {
  std::vector<Real> events{near, far};
  for (const auto &box : scene.boxes) {
    Real a, b;
    if (!slab_interval(box, ray, a, b)) continue;
    if (a > near && a < far) events.push_back(a);
    if (b > near && b < far) events.push_back(b);
  }
  std::sort(events.begin(), events.end());

  Accumulator acc;
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    const Real t0 = events[k];
    const Real t1 = events[k + 1];
    if (t1 <= t0) continue;
    const Vec3 mid = ray.origin + 0.5 * (t0 + t1) * ray.direction;
    Real sigma = 0.0;
    Rgb c0 = Rgb::Zero(), c1 = Rgb::Zero(); // sigma-weighted linear colour
    for (const auto &box : scene.boxes) {
      if ((mid.array() < box.lo.array()).any() || (mid.array() > box.hi.array()).any()) continue;
      sigma += box.sigma;
      c0 += box.sigma * box.color_at(ray.origin + t0 * ray.direction);
      c1 += box.sigma * (box.gradient * ray.direction);
    }
    if (sigma <= 0.0) continue;
    acc.add(sigma, t0, t1, c0 / sigma, c1 / sigma);
  }
  return acc.finish(background, min_opacity);
}

AnalyticSample render_plane(const TexturedPlane &plane, const Ray &ray, Real background, Real near, Real far,
                            Real min_opacity) {
  AnalyticSample s;
  s.color = Rgb::Constant(background);
  const Vec3 n = plane.normal.normalized();
  const Real denom = n.dot(ray.direction);
  if (std::abs(denom) < 1e-12) return s;
  const Real t = n.dot(plane.point - ray.origin) / denom;
  if (!(t >= near && t <= far)) return s;
  s.color = plane.texture(ray.origin + t * ray.direction);
  s.opacity = 1.0;
  s.depth = t;
  s.has_surface = 1.0 >= min_opacity;
  return s;
}

} // namespace

Rgb TexturedPlane::texture(const Vec3 &hit) const {
  const Vec3 n = normal.normalized();
  const Vec3 u = (u_axis - u_axis.dot(n) * n).normalized();
  const Vec3 v = n.cross(u);
  const Real a = (hit - point).dot(u) * frequency;
  const Real b = (hit - point).dot(v) * frequency;
  return {0.5 + 0.35 * std::sin(a), 0.5 + 0.35 * std::cos(b), 0.5 + 0.2 * std::sin(a + b)};
}

AnalyticSample render_analytic(const AnalyticScene &scene, const Ray &ray, Real near, Real far, Real min_opacity) {
  if (!(near < far)) throw std::domain_error("render_analytic: near must be < far");
  return std::visit(
      [&](const auto &m) -> AnalyticSample {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HomogeneousMedium>)
          return render_homogeneous(m, scene.background, near, far, min_opacity);
        else if constexpr (std::is_same_v<T, BoxScene>)
          return render_boxes(m, ray, scene.background, near, far, min_opacity);
        else
          return render_plane(m, ray, scene.background, near, far, min_opacity);
      },
      scene.medium);
}

AnalyticSample render_analytic(const AnalyticScene &scene, const Camera &camera, const Vec2 &pixel,
                               Real min_opacity) {
  return render_analytic(scene, generate_ray(camera, pixel.x(), pixel.y()), camera.near, camera.far, min_opacity);
}

AnalyticImage render_analytic_image(const AnalyticScene &scene, const Camera &camera, Real min_opacity) {
  AnalyticImage out;
  out.color = Image(camera.width, camera.height);
  out.depth = DepthMap(camera.width, camera.height, camera.near, camera.far);
  out.opacity.assign(out.color.pixel_count(), 0.0);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const AnalyticSample s = render_analytic(scene, pixel_ray(camera, x, y), camera.near, camera.far, min_opacity);
      out.color.set(x, y, s.color);
      const std::size_t i = out.depth.index(x, y);
      out.depth.depth[i] = s.depth;
      out.depth.valid[i] = s.has_surface ? 1 : 0;
      out.opacity[i] = s.opacity;
    }
  }
  return out;
}

AnalyticScene make_box_scene(Real background) {
  BoxScene scene;
  EmissiveBox floor;
  floor.lo = Vec3(-1.0, -1.0, -0.7);
  floor.hi = Vec3(1.0, 1.0, -0.5);
  floor.sigma = 30.0;
  floor.base = Rgb(0.55, 0.55, 0.5);
  floor.gradient.row(0) = Vec3(0.15, 0.0, 0.0);
  floor.gradient.row(1) = Vec3(0.0, 0.15, 0.0);
  floor.gradient.row(2) = Vec3(-0.1, 0.1, 0.0);
  scene.boxes.push_back(floor);

  EmissiveBox red;
  red.lo = Vec3(-0.75, -0.6, -0.5);
  red.hi = Vec3(-0.15, 0.0, 0.3);
  red.sigma = 30.0;
  red.base = Rgb(0.85, 0.25, 0.2);
  red.gradient.row(0) = Vec3(0.0, 0.0, 0.25);
  red.gradient.row(1) = Vec3(0.2, 0.0, 0.0);
  scene.boxes.push_back(red);

  EmissiveBox blue;
  blue.lo = Vec3(0.1, -0.2, -0.5);
  blue.hi = Vec3(0.6, 0.7, -0.1);
  blue.sigma = 30.0;
  blue.base = Rgb(0.2, 0.35, 0.85);
  blue.gradient.row(1) = Vec3(0.0, 0.2, 0.0);
  blue.gradient.row(2) = Vec3(0.0, 0.0, -0.2);
  scene.boxes.push_back(blue);

  EmissiveBox green;
  green.lo = Vec3(-0.35, 0.2, -0.5);
  green.hi = Vec3(0.05, 0.6, 0.6);
  green.sigma = 30.0;
  green.base = Rgb(0.25, 0.75, 0.3);
  green.gradient.row(0) = Vec3(0.0, 0.0, 0.2);
  green.gradient.row(2) = Vec3(0.0, 0.0, -0.2);
  scene.boxes.push_back(green);

  return {scene, background};
}

std::vector<Camera> orbit_cameras(int count, Real radius, Real focal, int width, int height, Real near, Real far,
                                  Real min_elevation, Real max_elevation, std::uint64_t seed) {
  Rng rng(seed);
  const Mat3 K = make_intrinsics(focal, width, height);
  std::vector<Camera> cams;
  const Real offset = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < count; ++i) {
    // evenly spread azimuths with jitter, random elevation in the band
    const Real azimuth = offset + 2.0 * std::numbers::pi * (i + rng.uniform(-0.2, 0.2)) / count;
    const Real elevation = rng.uniform(min_elevation, max_elevation);
    const Vec3 eye = radius * Vec3(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                                   std::sin(elevation));
    cams.push_back(look_at(eye, Vec3::Zero(), Vec3::UnitZ(), K, width, height, near, far));
  }
  return cams;
}

} // namespace selfnerf
