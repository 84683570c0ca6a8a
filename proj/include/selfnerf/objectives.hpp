#pragma once

#include "selfnerf/renderer.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace selfnerf {

struct LossWeights {
  Real lambda1_initial = 1.0;
  Real lambda2 = 0.01;
  Real lambda_u = 0.01;
  std::int64_t decay_interval = 10000;
  Real decay_factor = 2.0;
  /// Share of each batch cast from unseen poses with only the entropy term.
  Real entropy_ray_fraction = 0.25;

  void validate() const;
  /// lambda1_initial * decay_factor^(-floor(step / decay_interval))
  Real lambda1(std::int64_t step) const;
};

/// Loss value plus its gradient on the rendered quantities.
struct NllTerm {
  Real loss = 0.0;
  Rgb d_color_p = Rgb::Zero();
  Real d_variance = 0.0;
};

/// 0.5 log v^2 + r^2 / (2 v^2) with v^2 = max(V^u, beta_min^2) and r^2 the
/// channel-mean squared residual.
NllTerm nll_rgb(const Rgb &target, const Rgb &color_p, Real variance_u, Real beta_min);
Real nll_rgb_loss(const Rgb &target, const RenderedRay &rendered, Real beta_min);

/// NLL plus (lambda_u / N) sum_i sigma_u_i.
Real pseudo_loss(const Rgb &target, const RenderedRay &rendered, const ConeRaySamples &samples, Real lambda_u,
                 Real beta_min);

struct EntropyTerm {
  Real loss = 0.0;
  std::vector<Real> d_alpha;
};

inline constexpr Real kEntropyEpsilon = 1e-8;

/// Shannon entropy of alphas normalised to sum to one; 0 when the alpha sum
/// is below kEntropyEpsilon.
EntropyTerm cone_entropy(std::span<const Real> alphas);
Real cone_entropy_loss(std::span<const Real> alphas);

enum class RayRole { Seen, Pseudo, EntropyOnly };

struct LossRay {
  RayRole role = RayRole::Seen;
  Rgb target = Rgb::Zero();
  const RenderedRay *rendered = nullptr;
  const ConeRaySamples *samples = nullptr;
};

struct RayLossGrad {
  RenderedRayGrad rendered;
  /// Gradient applied directly to every sigma_u sample (density regulariser).
  Real d_sigma_u_each = 0.0;
};

struct RayBatchLoss {
  Real rgb = 0.0;     // L_r, mean over seen rays
  Real pseudo = 0.0;  // L_p, mean over pseudo rays
  Real entropy = 0.0; // L_c, mean over every ray
  Real lambda1 = 0.0;
  Real total = 0.0;
  std::vector<Real> per_ray;
};

/// L = L_r + lambda1(step) L_p + lambda2 L_c. When `grads` is non-null it is
/// resized to rays.size() and receives dL/d(rendered quantities) per ray.
RayBatchLoss total_loss(std::span<const LossRay> rays, const LossWeights &weights, std::int64_t step, Real beta_min,
                        std::vector<RayLossGrad> *grads = nullptr);

} // namespace selfnerf
