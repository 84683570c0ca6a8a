#include "selfnerf/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnerf {

void LossWeights::validate() const {
  if (lambda1_initial < 0.0 || lambda2 < 0.0 || lambda_u < 0.0)
    throw std::domain_error("loss weights must be >= 0");
  if (decay_interval <= 0) throw std::domain_error("loss.decay_interval must be > 0");
  if (!(decay_factor > 0.0)) throw std::domain_error("loss.decay_factor must be > 0");
  if (entropy_ray_fraction < 0.0 || entropy_ray_fraction >= 1.0)
    throw std::domain_error("loss.entropy_ray_fraction must lie in [0, 1)");
}

Real LossWeights::lambda1(std::int64_t step) const {
  const std::int64_t k = step < 0 ? 0 : step / decay_interval;
  return lambda1_initial * std::pow(decay_factor, -static_cast<Real>(k));
}

NllTerm nll_rgb(const Rgb &target, const Rgb &color_p, Real variance_u, Real beta_min) {
  const Real floor = beta_min * beta_min;
  const bool floored = !(variance_u > floor);
  const Real v2 = floored ? floor : variance_u;
  const Rgb diff = target - color_p;
  const Real r2 = diff.squaredNorm() / 3.0;

  NllTerm t;
  t.loss = 0.5 * std::log(v2) + r2 / (2.0 * v2);
  t.d_color_p = -diff / (3.0 * v2);
  t.d_variance = floored ? 0.0 : 0.5 / v2 - r2 / (2.0 * v2 * v2);
  return t;
}

Real nll_rgb_loss(const Rgb &target, const RenderedRay &rendered, Real beta_min) {
  return nll_rgb(target, rendered.color_p, rendered.variance_u, beta_min).loss;
}

Real pseudo_loss(const Rgb &target, const RenderedRay &rendered, const ConeRaySamples &samples, Real lambda_u,
                 Real beta_min) {
  Real reg = 0.0;
  for (const auto &o : samples.outputs) reg += o.sigma_u;
  const Real n = static_cast<Real>(samples.outputs.size());
  return nll_rgb_loss(target, rendered, beta_min) + (n > 0 ? lambda_u * reg / n : 0.0);
}

EntropyTerm cone_entropy(std::span<const Real> alphas) {
  EntropyTerm e;
  e.d_alpha.assign(alphas.size(), 0.0);
  Real sum = 0.0;
  for (Real a : alphas) sum += a;
  if (!(sum >= kEntropyEpsilon)) return e;
  for (Real a : alphas) {
    const Real q = a / sum;
    if (q > 0.0) e.loss -= q * std::log(q);
  }
  // dH/da_i = -(log q_i + H) / sum
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const Real q = alphas[i] / sum;
    if (q > 0.0) e.d_alpha[i] = -(std::log(q) + e.loss) / sum;
  }
  return e;
}

Real cone_entropy_loss(std::span<const Real> alphas) { return cone_entropy(alphas).loss; }

RayBatchLoss total_loss(std::span<const LossRay> rays, const LossWeights &weights, std::int64_t step, Real beta_min,
                        std::vector<RayLossGrad> *grads) {
  std::size_t n_seen = 0, n_pseudo = 0;
  for (const auto &r : rays) {
    if (!r.rendered) throw std::invalid_argument("total_loss: ray without rendering");
    if (r.role == RayRole::Seen) ++n_seen;
    if (r.role == RayRole::Pseudo) {
      if (!r.samples) throw std::invalid_argument("total_loss: pseudo ray without samples");
      ++n_pseudo;
    }
  }
  const Real w_seen = n_seen ? 1.0 / n_seen : 0.0;
  const Real w_pseudo = n_pseudo ? 1.0 / n_pseudo : 0.0;
  const Real w_entropy = rays.empty() ? 0.0 : 1.0 / rays.size();

  RayBatchLoss out;
  out.lambda1 = weights.lambda1(step);
  out.per_ray.resize(rays.size());
  if (grads) grads->assign(rays.size(), RayLossGrad{});

  for (std::size_t i = 0; i < rays.size(); ++i) {
    const LossRay &r = rays[i];
    const RenderedRay &rr = *r.rendered;
    Real ray_loss = 0.0;
    RayLossGrad g;

    if (r.role != RayRole::EntropyOnly) {
      const NllTerm nll = nll_rgb(r.target, rr.color_p, rr.variance_u, beta_min);
      const Real scale = r.role == RayRole::Seen ? w_seen : out.lambda1 * w_pseudo;
      Real term = nll.loss;
      if (r.role == RayRole::Pseudo) {
        Real reg = 0.0;
        for (const auto &o : r.samples->outputs) reg += o.sigma_u;
        const Real n = static_cast<Real>(r.samples->outputs.size());
        term += weights.lambda_u * reg / n;
        g.d_sigma_u_each = scale * weights.lambda_u / n;
        out.pseudo += w_pseudo * term;
      } else {
        out.rgb += w_seen * term;
      }
      ray_loss += scale * term;
      g.rendered.d_color_r = scale * nll.d_color_p;
      g.rendered.d_color_u = scale * nll.d_color_p;
      g.rendered.d_variance = scale * nll.d_variance;
    }

    const EntropyTerm ent = cone_entropy(rr.alphas);
    out.entropy += w_entropy * ent.loss;
    ray_loss += weights.lambda2 * w_entropy * ent.loss;
    if (weights.lambda2 != 0.0) {
      g.rendered.d_alpha = ent.d_alpha;
      for (Real &d : g.rendered.d_alpha) d *= weights.lambda2 * w_entropy;
    }

    out.per_ray[i] = ray_loss;
    if (grads) (*grads)[i] = std::move(g);
  }
  out.total = out.rgb + out.lambda1 * out.pseudo + weights.lambda2 * out.entropy;
  return out;
}

} // namespace selfnerf
