#include "selfnerf/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selfnerf {
namespace {

constexpr int kWindow = 11;
constexpr Real kSigma = 1.5;
constexpr Real kC1 = 0.01 * 0.01;
constexpr Real kC2 = 0.03 * 0.03;

std::vector<Real> gaussian_kernel() {
  std::vector<Real> k(kWindow);
  Real sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const Real x = i - kWindow / 2;
    k[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (Real &v : k) v /= sum;
  return k;
}

// Separable 'valid' filtering of a width x height plane.
std::vector<Real> filter_valid(const std::vector<Real> &plane, int width, int height, const std::vector<Real> &k) {
  const int ow = width - kWindow + 1;
  const int oh = height - kWindow + 1;
  std::vector<Real> tmp(std::size_t(ow) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      Real s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * plane[std::size_t(y) * width + x + i];
      tmp[std::size_t(y) * ow + x] = s;
    }
  std::vector<Real> out(std::size_t(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      Real s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * tmp[std::size_t(y + i) * ow + x];
      out[std::size_t(y) * ow + x] = s;
    }
  return out;
}

std::vector<Real> grey(const Image &img) {
  std::vector<Real> g(img.pixel_count());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = (img.data[3 * i] + img.data[3 * i + 1] + img.data[3 * i + 2]) / 3.0;
  return g;
}

} // namespace

Real psnr(const Image &a, const Image &b) {
  if (!a.same_shape(b)) throw std::domain_error("psnr: image sizes differ");
  if (a.data.empty()) throw std::domain_error("psnr: empty images");
  Real se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const Real d = a.data[i] - b.data[i];
    se += d * d;
  }
  const Real mse = se / a.data.size();
  if (mse == 0.0) return std::numeric_limits<Real>::infinity();
  return -10.0 * std::log10(mse);
}

Real ssim(const Image &a, const Image &b) {
  if (!a.same_shape(b)) throw std::domain_error("ssim: image sizes differ");
  if (a.width < kWindow || a.height < kWindow)
    throw std::domain_error("ssim: images must be at least 11x11");
  const auto k = gaussian_kernel();
  const auto x = grey(a);
  const auto y = grey(b);
  std::vector<Real> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, a.width, a.height, k);
  const auto my = filter_valid(y, a.width, a.height, k);
  const auto sxx = filter_valid(xx, a.width, a.height, k);
  const auto syy = filter_valid(yy, a.width, a.height, k);
  const auto sxy = filter_valid(xy, a.width, a.height, k);

  Real total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const Real vx = sxx[i] - mx[i] * mx[i];
    const Real vy = syy[i] - my[i] * my[i];
    const Real cxy = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
  }
  return total / mx.size();
}

void MetricReport::add(const Image &prediction, const Image &truth) {
  psnr.push_back(selfnerf::psnr(prediction, truth));
  ssim.push_back(selfnerf::ssim(prediction, truth));
}

Real MetricReport::mean_psnr() const {
  return psnr.empty() ? 0.0 : std::accumulate(psnr.begin(), psnr.end(), 0.0) / psnr.size();
}

Real MetricReport::mean_ssim() const {
  return ssim.empty() ? 0.0 : std::accumulate(ssim.begin(), ssim.end(), 0.0) / ssim.size();
}

} // namespace selfnerf
