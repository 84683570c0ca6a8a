#include "selfnerf/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace selfnerf {
namespace {

using ConstMap = Eigen::Map<const MatX>;
using Map = Eigen::Map<MatX>;

std::span<const Real> view(const FieldParams &p) { return {p.values.data(), p.values.size()}; }

} // namespace

Real softplus(Real x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Real sigmoid(Real x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

void FieldConfig::validate() const {
  encoding.validate();
  if (trunk_depth < 2) throw std::domain_error("field: trunk_depth must be >= 2");
  if (trunk_width < 1 || head_width < 1) throw std::domain_error("field: layer widths must be >= 1");
  if (dim_omega < 1 || dim_phi < 1) throw std::domain_error("field: embedding dims must be >= 1");
  if (num_images < 1) throw std::domain_error("field: num_images must be >= 1");
  if (!(beta_min > 0.0)) throw std::domain_error("field: beta_min must be > 0");
}

FieldParams::FieldParams(FieldConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int W = cfg_.trunk_width;
  const int H = cfg_.head_width;

  std::vector<int> trunk_widths{cfg_.encoding.pos_dim()};
  for (int i = 0; i < cfg_.trunk_depth; ++i) trunk_widths.push_back(W);
  trunk_ = Mlp(layout_, "trunk", trunk_widths, Activation::Relu, Activation::Relu);

  density_w_ = layout_.allocate("density.weight", 1, W);
  density_b_ = layout_.allocate("density.bias", 1, 1);
  feature_w_ = layout_.allocate("feature.weight", W, W);
  feature_b_ = layout_.allocate("feature.bias", W, 1);
  color_ = Mlp(layout_, "color", {W + cfg_.encoding.dir_dim(), H, 3}, Activation::Relu, Activation::Identity);
  uncertainty_ =
      Mlp(layout_, "uncertainty", {W + cfg_.dim_omega + cfg_.dim_phi, H, 5}, Activation::Relu, Activation::Identity);
  omega_offset_ = layout_.allocate("omega", cfg_.dim_omega, 2);
  phi_offset_ = layout_.allocate("phi", cfg_.dim_phi, cfg_.num_images);

  values.assign(layout_.total(), 0.0);
}

namespace {
// Output biases of the uncertainty head at initialisation: sigma_u = softplus(-8)
// and mu_u = beta_min + softplus(-6) keep V^u near the floor.
constexpr Real kUncertaintyDensityBias = -8.0;
constexpr Real kUncertaintyScaleBias = -6.0;
} // namespace

FieldParams init_params(const FieldConfig &cfg, std::uint64_t seed) {
  FieldParams p(cfg);
  Rng rng(seed);
  std::span<Real> v(p.values.data(), p.values.size());
  p.trunk().init(v, rng);

  const int W = cfg.trunk_width;
  const Real bound = std::sqrt(3.0 / W);
  for (int i = 0; i < W; ++i) v[p.density_weight_offset() + i] = rng.uniform(-bound, bound);
  v[p.density_bias_offset()] = 0.0;
  for (int i = 0; i < W * W; ++i) v[p.feature_weight_offset() + i] = rng.uniform(-bound, bound);
  for (int i = 0; i < W; ++i) v[p.feature_bias_offset() + i] = 0.0;

  p.color_head().init(v, rng);
  p.uncertainty_head().init(v, rng);
  // Start the uncertainty branch nearly transparent so the radiance branch
  // has to explain the images first; otherwise the NLL lets V^u absorb the
  // residual and C^r never forms.
  const Mlp &u = p.uncertainty_head();
  v[u.bias_offset(u.layer_count() - 1)] = kUncertaintyDensityBias;
  v[u.bias_offset(u.layer_count() - 1) + 4] = kUncertaintyScaleBias;

  for (int i = 0; i < cfg.dim_omega * 2; ++i) v[p.omega_offset() + i] = rng.uniform(-0.01, 0.01);
  for (int i = 0; i < cfg.dim_phi * cfg.num_images; ++i) v[p.phi_offset() + i] = rng.uniform(-0.01, 0.01);
  return p;
}

FieldBatch evaluate_batch(const FieldParams &params, const MatX &pos_feat, const MatX &dir_feat,
                          std::span<const int> omega_ids, std::span<const int> phi_ids, FieldCache *cache) {
  const FieldConfig &cfg = params.config();
  const Eigen::Index B = pos_feat.cols();
  if (dir_feat.cols() != B || Eigen::Index(omega_ids.size()) != B || Eigen::Index(phi_ids.size()) != B)
    throw std::invalid_argument("evaluate_batch: batch sizes disagree");
  if (pos_feat.rows() != cfg.encoding.pos_dim() || dir_feat.rows() != cfg.encoding.dir_dim())
    throw std::invalid_argument("evaluate_batch: feature dimensions do not match the encoding config");
  for (Eigen::Index b = 0; b < B; ++b) {
    if (omega_ids[b] < 0 || omega_ids[b] > 1)
      throw std::domain_error("evaluate: omega id " + std::to_string(omega_ids[b]) + " out of range");
    if (phi_ids[b] < 0 || phi_ids[b] >= cfg.num_images)
      throw std::domain_error("evaluate: phi id " + std::to_string(phi_ids[b]) + " out of range (table has " +
                              std::to_string(cfg.num_images) + " rows)");
  }

  const auto v = view(params);
  const int W = cfg.trunk_width;
  const MatX h = params.trunk().forward(v, pos_feat, cache ? &cache->trunk : nullptr);

  // Radiance head: reads h and the view direction only.
  const ConstMap Wd(v.data() + params.density_weight_offset(), 1, W);
  VecX density_raw = (Wd * h).transpose();
  density_raw.array() += v[params.density_bias_offset()];

  const ConstMap Wf(v.data() + params.feature_weight_offset(), W, W);
  const Eigen::Map<const VecX> bf(v.data() + params.feature_bias_offset(), W);
  MatX color_in(W + dir_feat.rows(), B);
  color_in.topRows(W).noalias() = Wf * h;
  color_in.topRows(W).colwise() += bf;
  color_in.bottomRows(dir_feat.rows()) = dir_feat;
  MatX color_out = params.color_head().forward(v, color_in, cache ? &cache->color : nullptr);
  color_out = color_out.unaryExpr([](Real x) { return sigmoid(x); });

  // Uncertainty head.
  const ConstMap omega(v.data() + params.omega_offset(), cfg.dim_omega, 2);
  const ConstMap phi(v.data() + params.phi_offset(), cfg.dim_phi, cfg.num_images);
  MatX unc_in(W + cfg.dim_omega + cfg.dim_phi, B);
  unc_in.topRows(W) = h;
  for (Eigen::Index b = 0; b < B; ++b) {
    unc_in.col(b).segment(W, cfg.dim_omega) = omega.col(omega_ids[b]);
    unc_in.col(b).tail(cfg.dim_phi) = phi.col(phi_ids[b]);
  }
  MatX unc_raw = params.uncertainty_head().forward(v, unc_in, cache ? &cache->uncertainty : nullptr);

  FieldBatch out(B);
  for (Eigen::Index b = 0; b < B; ++b) {
    out.sigma[b] = softplus(density_raw[b]);
    out.sigma_u[b] = softplus(unc_raw(0, b));
    for (int c = 0; c < 3; ++c) out.color_u(c, b) = softplus(unc_raw(1 + c, b));
    out.mu_u[b] = softplus(unc_raw(4, b)) + cfg.beta_min;
  }
  out.color = color_out;

  if (cache) {
    cache->density_raw = std::move(density_raw);
    cache->color_out = std::move(color_out);
    cache->uncertainty_raw = std::move(unc_raw);
    cache->omega_ids.assign(omega_ids.begin(), omega_ids.end());
    cache->phi_ids.assign(phi_ids.begin(), phi_ids.end());
    cache->valid = true;
  }
  return out;
}

FieldOutput evaluate(const FieldParams &params, std::span<const Real> pos_feat, std::span<const Real> dir_feat,
                     WarpClass omega, int phi) {
  const MatX pos = Eigen::Map<const MatX>(pos_feat.data(), Eigen::Index(pos_feat.size()), 1);
  const MatX dir = Eigen::Map<const MatX>(dir_feat.data(), Eigen::Index(dir_feat.size()), 1);
  const int o = static_cast<int>(omega);
  return evaluate_batch(params, pos, dir, {&o, 1}, {&phi, 1}, nullptr).at(0);
}

void backward(const FieldParams &params, GradientTape &tape, const FieldBatch &upstream, const FieldCache &cache) {
  if (!cache.valid) throw std::logic_error("field backward: activation cache is empty");
  if (!tape.congruent(params)) throw std::logic_error("field backward: tape does not match parameters");
  const FieldConfig &cfg = params.config();
  const Eigen::Index B = upstream.size();
  if (cache.density_raw.size() != B) throw std::logic_error("field backward: cache/batch size mismatch");

  const auto v = view(params);
  std::span<Real> g(tape.grads.data(), tape.grads.size());
  const int W = cfg.trunk_width;
  const MatX &h = cache.trunk.acts.back();

  // Uncertainty head.
  MatX d_unc_raw(5, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    d_unc_raw(0, b) = upstream.sigma_u[b] * sigmoid(cache.uncertainty_raw(0, b));
    for (int c = 0; c < 3; ++c) d_unc_raw(1 + c, b) = upstream.color_u(c, b) * sigmoid(cache.uncertainty_raw(1 + c, b));
    d_unc_raw(4, b) = upstream.mu_u[b] * sigmoid(cache.uncertainty_raw(4, b));
  }
  const MatX d_unc_in = params.uncertainty_head().backward(v, g, cache.uncertainty, d_unc_raw);
  Map g_omega(g.data() + params.omega_offset(), cfg.dim_omega, 2);
  Map g_phi(g.data() + params.phi_offset(), cfg.dim_phi, cfg.num_images);
  for (Eigen::Index b = 0; b < B; ++b) {
    g_omega.col(cache.omega_ids[b]) += d_unc_in.col(b).segment(W, cfg.dim_omega);
    g_phi.col(cache.phi_ids[b]) += d_unc_in.col(b).tail(cfg.dim_phi);
  }
  MatX d_h = d_unc_in.topRows(W);

  // Color head.
  MatX d_color_raw = upstream.color.array() * cache.color_out.array() * (1.0 - cache.color_out.array());
  const MatX d_color_in = params.color_head().backward(v, g, cache.color, d_color_raw);
  const MatX d_feat = d_color_in.topRows(W);
  const ConstMap Wf(v.data() + params.feature_weight_offset(), W, W);
  Map gWf(g.data() + params.feature_weight_offset(), W, W);
  Eigen::Map<VecX> gbf(g.data() + params.feature_bias_offset(), W);
  const MatX dWf = d_feat * h.transpose(); // aligned temporaries, see Mlp::backward
  const VecX dbf = d_feat.rowwise().sum();
  gWf += dWf;
  gbf += dbf;
  d_h.noalias() += Wf.transpose() * d_feat;

  // Density head.
  VecX d_density_raw(B);
  for (Eigen::Index b = 0; b < B; ++b) d_density_raw[b] = upstream.sigma[b] * sigmoid(cache.density_raw[b]);
  const ConstMap Wd(v.data() + params.density_weight_offset(), 1, W);
  Map gWd(g.data() + params.density_weight_offset(), 1, W);
  const MatX dWd = d_density_raw.transpose() * h.transpose();
  gWd += dWd;
  g[params.density_bias_offset()] += d_density_raw.sum();
  d_h.noalias() += Wd.transpose() * d_density_raw.transpose();

  params.trunk().backward(v, g, cache.trunk, d_h);
}

} // namespace selfnerf
