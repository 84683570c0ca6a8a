#pragma once

#include "selfnerf/encoding.hpp"
#include "selfnerf/mlp.hpp"
#include "selfnerf/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace selfnerf {

/// Row of the warping-embedding table. Seen views share a row with warped
/// pseudo-views; predicted pseudo-views use the other.
enum class WarpClass : int { SeenOrWarped = 0, Predicted = 1 };

struct FieldConfig {
  EncodingConfig encoding;
  int trunk_depth = 4;
  int trunk_width = 128;
  int head_width = 64;
  int dim_omega = 16;
  int dim_phi = 16;
  int num_images = 1; // rows of the per-image uncertainty table
  Real beta_min = 0.01;

  void validate() const;
};

/// Network layout:
///   trunk   : IPE(x) -> [width, relu] x depth                  -> h
///   density : h -> 1, softplus                                 -> sigma
///   color   : [W_feat h ; PE(d)] -> head, relu -> 3, sigmoid   -> c
///   uncert. : [h ; omega ; phi]  -> head, relu -> 5, softplus  -> sigma_u, c_u, mu_u - beta_min
/// Only the uncertainty head reads the embeddings.
class FieldParams {
public:
  explicit FieldParams(FieldConfig cfg);

  const FieldConfig &config() const { return cfg_; }
  const ParamLayout &layout() const { return layout_; }
  std::size_t size() const { return values.size(); }

  std::size_t omega_offset() const { return omega_offset_; }
  std::size_t phi_offset() const { return phi_offset_; }
  std::size_t density_weight_offset() const { return density_w_; }
  std::size_t density_bias_offset() const { return density_b_; }
  std::size_t feature_weight_offset() const { return feature_w_; }
  std::size_t feature_bias_offset() const { return feature_b_; }

  const Mlp &trunk() const { return trunk_; }
  const Mlp &color_head() const { return color_; }
  const Mlp &uncertainty_head() const { return uncertainty_; }

  std::vector<Real> values;

private:
  FieldConfig cfg_;
  ParamLayout layout_;
  Mlp trunk_;
  Mlp color_;
  Mlp uncertainty_;
  std::size_t density_w_ = 0, density_b_ = 0;
  std::size_t feature_w_ = 0, feature_b_ = 0;
  std::size_t omega_offset_ = 0, phi_offset_ = 0;
};

/// Per-parameter gradient accumulators, congruent with FieldParams::values.
struct GradientTape {
  std::vector<Real> grads;

  explicit GradientTape(const FieldParams &params) : grads(params.size(), 0.0) {}
  void zero() { std::fill(grads.begin(), grads.end(), 0.0); }
  bool congruent(const FieldParams &params) const { return grads.size() == params.size(); }
};

struct FieldOutput {
  Real sigma = 0.0;
  Rgb color = Rgb::Zero();
  Real sigma_u = 0.0;
  Rgb color_u = Rgb::Zero();
  Real mu_u = 0.0;
};

/// Column-per-sample outputs, also used for upstream gradients.
struct FieldBatch {
  VecX sigma;
  MatX color; // 3 x B
  VecX sigma_u;
  MatX color_u; // 3 x B
  VecX mu_u;

  explicit FieldBatch(Eigen::Index n = 0)
      : sigma(VecX::Zero(n)), color(MatX::Zero(3, n)), sigma_u(VecX::Zero(n)), color_u(MatX::Zero(3, n)),
        mu_u(VecX::Zero(n)) {}
  Eigen::Index size() const { return sigma.size(); }
  FieldOutput at(Eigen::Index i) const {
    return {sigma[i], color.col(i), sigma_u[i], color_u.col(i), mu_u[i]};
  }
};

struct FieldCache {
  bool valid = false;
  Mlp::Cache trunk;
  Mlp::Cache color;
  Mlp::Cache uncertainty;
  VecX density_raw;
  MatX color_out; // post-sigmoid
  MatX uncertainty_raw;
  std::vector<int> omega_ids;
  std::vector<int> phi_ids;
};

/// Deterministic in (cfg, seed).
FieldParams init_params(const FieldConfig &cfg, std::uint64_t seed);

/// pos_feat: pos_dim x B, dir_feat: dir_dim x B, one (omega, phi) per column.
/// Throws std::domain_error for out-of-range ids.
FieldBatch evaluate_batch(const FieldParams &params, const MatX &pos_feat, const MatX &dir_feat,
                          std::span<const int> omega_ids, std::span<const int> phi_ids, FieldCache *cache);

FieldOutput evaluate(const FieldParams &params, std::span<const Real> pos_feat, std::span<const Real> dir_feat,
                     WarpClass omega, int phi);
inline FieldOutput evaluate(const FieldParams &params, const VecX &pos_feat, const VecX &dir_feat, WarpClass omega,
                            int phi) {
  return evaluate(params, std::span<const Real>(pos_feat.data(), std::size_t(pos_feat.size())),
                  std::span<const Real>(dir_feat.data(), std::size_t(dir_feat.size())), omega, phi);
}

/// Reverse pass for the matching evaluate_batch call; accumulates into the tape.
/// Throws std::logic_error when `cache` is not populated.
void backward(const FieldParams &params, GradientTape &tape, const FieldBatch &upstream, const FieldCache &cache);

/// Numerically stable log(1 + e^x) and its derivative.
Real softplus(Real x);
Real sigmoid(Real x);

} // namespace selfnerf
