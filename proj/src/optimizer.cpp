#include "selfnerf/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnerf {

void adam_step(std::span<Real> params, std::span<const Real> grads, AdamState &state, Real learning_rate,
               const AdamConfig &cfg) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (state.m.size() != params.size()) {
    if (state.step != 0 || !state.m.empty()) throw std::invalid_argument("adam_step: optimizer state size mismatch");
    state = AdamState(params.size());
  }
  ++state.step;
  const Real c1 = 1.0 - std::pow(cfg.beta1, static_cast<Real>(state.step));
  const Real c2 = 1.0 - std::pow(cfg.beta2, static_cast<Real>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Real g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const Real m_hat = state.m[i] / c1;
    const Real v_hat = state.v[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

} // namespace selfnerf
