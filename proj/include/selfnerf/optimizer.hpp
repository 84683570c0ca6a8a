#pragma once

#include "selfnerf/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace selfnerf {

struct AdamConfig {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

struct AdamState {
  std::vector<Real> m;
  std::vector<Real> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamState &state, Real learning_rate,
               const AdamConfig &cfg = {});

} // namespace selfnerf
