#pragma once

#include "selfnerf/rng.hpp"
#include "selfnerf/types.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace selfnerf {

/// Named block inside a flat parameter vector (column-major rows x cols).
struct TensorSlot {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return std::size_t(rows) * cols; }
};

class ParamLayout {
public:
  std::size_t allocate(std::string name, int rows, int cols);
  std::size_t total() const { return total_; }
  const std::vector<TensorSlot> &slots() const { return slots_; }

private:
  std::vector<TensorSlot> slots_;
  std::size_t total_ = 0;
};

enum class Activation { Identity, Relu, Tanh };

/// Fully connected layer stack evaluated column-wise over a batch
/// (features x batch). Weights live in an external flat vector.
class Mlp {
public:
  struct Cache {
    // acts[0] is the input, acts[l + 1] the output of layer l.
    std::vector<MatX> acts;
  };

  Mlp() = default;
  /// widths = {in, hidden..., out}; `hidden` applies to every layer but the last.
  Mlp(ParamLayout &layout, const std::string &name, std::vector<int> widths, Activation hidden, Activation output);

  int in_dim() const { return widths_.front(); }
  int out_dim() const { return widths_.back(); }
  std::size_t layer_count() const { return weight_offsets_.size(); }
  std::size_t weight_offset(std::size_t layer) const { return weight_offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return bias_offsets_[layer]; }
  int fan_in(std::size_t layer) const { return widths_[layer]; }
  int fan_out(std::size_t layer) const { return widths_[layer + 1]; }

  /// Uniform(+-sqrt(3 / fan_in)) weights (variance 1/fan_in), zero biases.
  void init(std::span<Real> params, Rng &rng) const;

  MatX forward(std::span<const Real> params, const MatX &x, Cache *cache) const;

  /// Accumulates parameter gradients into `grads`; returns d(loss)/d(input).
  MatX backward(std::span<const Real> params, std::span<Real> grads, const Cache &cache,
                const MatX &d_out) const;

private:
  Activation activation(std::size_t layer) const { return layer + 1 == layer_count() ? output_ : hidden_; }

  std::vector<int> widths_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  Activation hidden_ = Activation::Relu;
  Activation output_ = Activation::Identity;
};

} // namespace selfnerf
