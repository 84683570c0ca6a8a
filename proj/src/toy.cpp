#include "selfnerf/toy.hpp"

#include "selfnerf/mlp.hpp"
#include "selfnerf/optimizer.hpp"
#include "selfnerf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selfnerf::toy {
namespace {

struct Net {
  ParamLayout layout;
  Mlp mlp;
  std::vector<Real> params;

  Net(const ToyConfig &cfg, std::uint64_t seed) {
    std::vector<int> widths{1};
    for (int i = 0; i + 1 < cfg.layers; ++i) widths.push_back(cfg.hidden_width);
    widths.push_back(1);
    mlp = Mlp(layout, "toy", widths, Activation::Tanh, Activation::Identity);
    params.assign(layout.total(), 0.0);
    Rng rng(seed);
    mlp.init(params, rng);
  }

  VecX predict(const std::vector<Real> &xs) const {
    MatX x(1, Eigen::Index(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) x(0, Eigen::Index(i)) = xs[i];
    return mlp.forward(params, x, nullptr).row(0).transpose();
  }

  void fit(const std::vector<Sample> &data, const ToyConfig &cfg) {
    const Eigen::Index n = Eigen::Index(data.size());
    MatX x(1, n);
    VecX y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(0, i) = data[i].x;
      y[i] = data[i].y;
    }
    AdamState adam(params.size());
    std::vector<Real> grads(params.size());
    Mlp::Cache cache;
    for (int step = 0; step < cfg.steps; ++step) {
      const MatX out = mlp.forward(params, x, &cache);
      const MatX d_out = (2.0 / n) * (out.row(0) - y.transpose());
      std::fill(grads.begin(), grads.end(), 0.0);
      mlp.backward(params, grads, cache, d_out);
      adam_step(params, grads, adam, cfg.learning_rate);
    }
  }
};

Real mean_abs_error(const VecX &pred, const std::vector<Real> &xs) {
  Real s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += std::abs(pred[Eigen::Index(i)] - target_function(xs[i]));
  return s / xs.size();
}

} // namespace

void ToyConfig::validate() const {
  if (labeled < 1 || warped < 0 || predicted < 0) throw std::domain_error("toy: invalid label counts");
  if (hidden_width < 1 || layers < 2) throw std::domain_error("toy: invalid network shape");
  if (!(x_min < x_max)) throw std::domain_error("toy: empty interval");
  if (steps < 0 || grid < 2) throw std::domain_error("toy: invalid steps or grid");
}

Real target_function(Real x) { return std::sin(x - 0.1) + std::sin(x) + std::sin(x + 0.1); }

ToyReport run_basic_step(const ToyConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(Rng::mix(seed, 0x70));
  ToyReport report;
  report.seed = seed;

  // One labelled point per equal stratum of the interval.
  const Real span = cfg.x_max - cfg.x_min;
  for (int i = 0; i < cfg.labeled; ++i) {
    const Real x = cfg.x_min + span * (i + rng.uniform()) / cfg.labeled;
    report.labeled.push_back({x, target_function(x)});
  }

  // Unlabelled points: cell-centred grid minus anything coinciding with a label.
  const int unlabeled = cfg.warped + cfg.predicted;
  std::vector<Real> xu;
  for (int i = 0; i < unlabeled; ++i) {
    const Real x = cfg.x_min + span * (i + 0.5) / unlabeled;
    const bool clash = std::any_of(report.labeled.begin(), report.labeled.end(),
                                   [&](const Sample &s) { return std::abs(s.x - x) < 1e-9; });
    if (!clash) xu.push_back(x);
  }
  for (std::size_t i = xu.size(); i > 1; --i) std::swap(xu[i - 1], xu[rng.index(i)]);

  std::vector<Real> grid(cfg.grid);
  for (int i = 0; i < cfg.grid; ++i) grid[i] = cfg.x_min + span * i / (cfg.grid - 1);
  report.grid_x = grid;

  Net f1(cfg, seed);
  f1.fit(report.labeled, cfg);
  const VecX f1_grid = f1.predict(grid);
  report.mae_f1 = mean_abs_error(f1_grid, grid);
  report.curve_f1.assign(f1_grid.data(), f1_grid.data() + f1_grid.size());

  const VecX teacher = f1.predict(xu);
  for (std::size_t i = 0; i < xu.size(); ++i) {
    const Real truth = target_function(xu[i]);
    const Real guess = cfg.oracle_teacher ? truth : teacher[Eigen::Index(i)];
    if (int(i) < cfg.warped)
      report.warped.push_back({xu[i], 0.5 * (guess + truth)});
    else
      report.predicted.push_back({xu[i], guess});
  }

  std::vector<Sample> all = report.labeled;
  all.insert(all.end(), report.warped.begin(), report.warped.end());
  all.insert(all.end(), report.predicted.begin(), report.predicted.end());
  Net f2(cfg, seed); // same initialisation as the teacher
  f2.fit(all, cfg);
  const VecX f2_grid = f2.predict(grid);
  report.mae_f2 = mean_abs_error(f2_grid, grid);
  report.curve_f2.assign(f2_grid.data(), f2_grid.data() + f2_grid.size());
  return report;
}

} // namespace selfnerf::toy
