#pragma once

#include "selfnerf/image.hpp"

#include <limits>
#include <vector>

namespace selfnerf {

/// -10 log10(MSE) over all pixels and channels; +infinity for identical images.
Real psnr(const Image &a, const Image &b);

/// Wang et al. SSIM on the channel-mean grey image: 11x11 Gaussian window
/// (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2 for unit dynamic range, averaged
/// over every fully-contained window. Throws std::domain_error for mismatched
/// sizes or images smaller than the window.
Real ssim(const Image &a, const Image &b);

struct MetricReport {
  std::vector<Real> psnr;
  std::vector<Real> ssim;

  void add(const Image &prediction, const Image &truth);
  Real mean_psnr() const;
  Real mean_ssim() const;
};

} // namespace selfnerf
