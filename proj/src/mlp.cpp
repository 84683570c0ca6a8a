#include "selfnerf/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnerf {
namespace {

using ConstMap = Eigen::Map<const MatX>;
using Map = Eigen::Map<MatX>;
using ConstVecMap = Eigen::Map<const VecX>;
using VecMap = Eigen::Map<VecX>;

void apply(Activation act, MatX &z) {
  switch (act) {
  case Activation::Identity:
    break;
  case Activation::Relu:
    z = z.cwiseMax(0.0);
    break;
  case Activation::Tanh:
    z = z.array().tanh().matrix();
    break;
  }
}

// d(act)/dz expressed through the activation's output.
void chain(Activation act, const MatX &out, MatX &grad) {
  switch (act) {
  case Activation::Identity:
    break;
  case Activation::Relu:
    grad = (out.array() > 0.0).select(grad, 0.0);
    break;
  case Activation::Tanh:
    grad.array() *= 1.0 - out.array().square();
    break;
  }
}

} // namespace

std::size_t ParamLayout::allocate(std::string name, int rows, int cols) {
  TensorSlot slot{std::move(name), total_, rows, cols};
  total_ += slot.size();
  slots_.push_back(std::move(slot));
  return slots_.back().offset;
}

Mlp::Mlp(ParamLayout &layout, const std::string &name, std::vector<int> widths, Activation hidden,
         Activation output)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp '" + name + "': needs at least one layer");
  for (int w : widths_)
    if (w < 1) throw std::invalid_argument("Mlp '" + name + "': widths must be >= 1");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const std::string tag = name + "." + std::to_string(l);
    weight_offsets_.push_back(layout.allocate(tag + ".weight", widths_[l + 1], widths_[l]));
    bias_offsets_.push_back(layout.allocate(tag + ".bias", widths_[l + 1], 1));
  }
}

void Mlp::init(std::span<Real> params, Rng &rng) const {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const Real bound = std::sqrt(3.0 / fan_in(l));
    Map W(params.data() + weight_offsets_[l], fan_out(l), fan_in(l));
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-bound, bound);
    VecMap(params.data() + bias_offsets_[l], fan_out(l)).setZero();
  }
}

MatX Mlp::forward(std::span<const Real> params, const MatX &x, Cache *cache) const {
  if (x.rows() != in_dim()) throw std::invalid_argument("Mlp::forward: input has the wrong feature count");
  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(layer_count() + 1);
    cache->acts.push_back(x);
  }
  MatX a = x;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const ConstMap W(params.data() + weight_offsets_[l], fan_out(l), fan_in(l));
    const ConstVecMap b(params.data() + bias_offsets_[l], fan_out(l));
    MatX z = W * a;
    z.colwise() += b;
    apply(activation(l), z);
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

MatX Mlp::backward(std::span<const Real> params, std::span<Real> grads, const Cache &cache,
                   const MatX &d_out) const {
  if (cache.acts.size() != layer_count() + 1)
    throw std::logic_error("Mlp::backward: no cached activations from a matching forward pass");
  MatX delta = d_out;
  for (std::size_t l = layer_count(); l-- > 0;) {
    chain(activation(l), cache.acts[l + 1], delta);
    const ConstMap W(params.data() + weight_offsets_[l], fan_out(l), fan_in(l));
    Map gW(grads.data() + weight_offsets_[l], fan_out(l), fan_in(l));
    VecMap gb(grads.data() + bias_offsets_[l], fan_out(l));
    // Products land in aligned temporaries: Eigen peels unaligned destinations
    // differently per address, which would make sums allocation-dependent.
    const MatX dW = delta * cache.acts[l].transpose();
    const VecX db = delta.rowwise().sum();
    gW += dW;
    gb += db;
    delta = W.transpose() * delta;
  }
  return delta;
}

} // namespace selfnerf
