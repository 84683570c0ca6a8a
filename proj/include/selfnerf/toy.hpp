#pragma once

#include "selfnerf/types.hpp"

#include <cstdint>
#include <numbers>
#include <vector>

namespace selfnerf::toy {

/// Self-training on a 1-D regression problem: a teacher fitted to a handful
/// of labels produces pseudo-labels for a student trained on everything.
struct ToyConfig {
  int labeled = 4;
  int warped = 8;
  int predicted = 12;
  int hidden_width = 100;
  int layers = 3; // fully connected layers, 1 -> width -> ... -> 1
  Real x_min = -std::numbers::pi;
  Real x_max = std::numbers::pi;
  int steps = 2000;
  Real learning_rate = 1e-2;
  int grid = 1000;
  /// Use the exact target in place of the teacher when forming pseudo-labels.
  bool oracle_teacher = false;

  void validate() const;
};

/// sin(x - 0.1) + sin(x) + sin(x + 0.1)
Real target_function(Real x);

struct Sample {
  Real x = 0.0;
  Real y = 0.0;
};

struct ToyReport {
  std::uint64_t seed = 0;
  Real mae_f1 = 0.0;
  Real mae_f2 = 0.0;
  std::vector<Sample> labeled;
  std::vector<Sample> warped;    // labels 0.5 (teacher + target)
  std::vector<Sample> predicted; // labels = teacher
  std::vector<Real> grid_x;
  std::vector<Real> curve_f1;
  std::vector<Real> curve_f2;
};

ToyReport run_basic_step(const ToyConfig &cfg, std::uint64_t seed);

} // namespace selfnerf::toy
