#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "selfnerf/encoding.hpp"
#include "selfnerf/rng.hpp"

#include <cmath>

using namespace selfnerf;

TEST_CASE("positional encoding layout and values") {
  const Vec3 x(0.3, -1.2, 2.0);
  const VecX f = positional_encode(x, 4, true);
  REQUIRE(f.size() == encoded_size(4, true));
  CHECK(f[0] == 0.3);
  CHECK(f[2] == 2.0);
  for (int k = 0; k < 4; ++k)
    for (int a = 0; a < 3; ++a) {
      const Real arg = std::ldexp(1.0, k) * x[a];
      CHECK(f[encoding_index(k, a, false, true)] == doctest::Approx(std::sin(arg)).epsilon(1e-15));
      CHECK(f[encoding_index(k, a, true, true)] == doctest::Approx(std::cos(arg)).epsilon(1e-15));
    }
  CHECK(positional_encode(x, 4, false).size() == 24);
}

TEST_CASE("positional encoding at the origin") {
  const VecX f = positional_encode(Vec3::Zero(), 3, false);
  for (int k = 0; k < 3; ++k)
    for (int a = 0; a < 3; ++a) {
      CHECK(f[encoding_index(k, a, false, false)] == 0.0);
      CHECK(f[encoding_index(k, a, true, false)] == 1.0);
    }
}

TEST_CASE("IPE attenuates by the Gaussian factor") {
  FrustumGaussian g;
  g.mean = Vec3(1.0, 0.0, 0.0);
  g.variance = Vec3(0.25, 0.25, 0.25);
  const VecX f = integrated_positional_encode(g, 2, false);
  CHECK(f[encoding_index(0, 0, false, false)] == doctest::Approx(std::sin(1.0) * std::exp(-0.125)).epsilon(1e-14));
  CHECK(f[encoding_index(1, 0, false, false)] == doctest::Approx(std::sin(2.0) * std::exp(-0.5)).epsilon(1e-14));
  CHECK(f[encoding_index(0, 1, true, false)] == doctest::Approx(std::exp(-0.125)).epsilon(1e-14));
}

TEST_CASE("IPE with zero variance equals PE") {
  FrustumGaussian g;
  g.mean = Vec3(0.4, 0.1, -0.7);
  const VecX a = integrated_positional_encode(g, 5, true);
  const VecX b = positional_encode(g.mean, 5, true);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frustum moments match Monte Carlo") {
  Ray ray;
  ray.origin = Vec3(0.3, -0.2, 0.1);
  ray.direction = Vec3(0.48, 0.6, -0.64); // unit
  ray.pixel_radius = 0.08;
  const Real t0 = 2.0, t1 = 3.0;
  const FrustumGaussian g = frustum_gaussian(ray, t0, t1);

  // independent oracle: sample the cone segment uniformly by volume
  const Vec3 d = ray.direction;
  const Vec3 e1 = d.unitOrthogonal();
  const Vec3 e2 = d.cross(e1);
  Rng rng(17);
  const int n = 1000000;
  Vec3 sum = Vec3::Zero(), sum2 = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    const Real t = std::cbrt(t0 * t0 * t0 + rng.uniform() * (t1 * t1 * t1 - t0 * t0 * t0));
    const Real rho = ray.pixel_radius * t * std::sqrt(rng.uniform());
    const Real th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 p = ray.origin + t * d + rho * (std::cos(th) * e1 + std::sin(th) * e2);
    sum += p;
    sum2 += p.cwiseProduct(p);
  }
  const Vec3 mean = sum / n;
  const Vec3 var = sum2 / n - mean.cwiseProduct(mean);
  for (int a = 0; a < 3; ++a) {
    CHECK(g.mean[a] == doctest::Approx(mean[a]).epsilon(0.01));
    CHECK(g.variance[a] == doctest::Approx(var[a]).epsilon(0.01));
  }
}

TEST_CASE("frustum rejects empty intervals") {
  CHECK_THROWS_AS(frustum_gaussian(Ray{}, 2.0, 2.0), std::domain_error);
}

TEST_CASE("encoding config validation") {
  EncodingConfig cfg;
  CHECK(cfg.pos_dim() == 63);
  CHECK(cfg.dir_dim() == 27);
  cfg.pos_frequencies = -1;
  CHECK_THROWS(cfg.validate());
}
