#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "selfnerf/toy.hpp"

#include <cmath>

using namespace selfnerf;
using namespace selfnerf::toy;

TEST_CASE("target function values") {
  CHECK(std::abs(target_function(0.0)) < 1e-15);
  CHECK(target_function(std::numbers::pi / 2) == doctest::Approx(2.0 * std::cos(0.1) + 1.0).epsilon(1e-14));
  CHECK(target_function(std::numbers::pi / 2) == doctest::Approx(2.9900).epsilon(1e-4));
  for (Real x : {0.3, 1.7, -2.2}) CHECK(target_function(-x) == doctest::Approx(-target_function(x)));
}

TEST_CASE("pseudo-label construction") {
  ToyConfig cfg;
  cfg.steps = 200;
  const ToyReport r = run_basic_step(cfg, 3);
  CHECK(r.labeled.size() == 4);
  CHECK(r.warped.size() == 8);
  CHECK(r.predicted.size() == 12);
  for (const Sample &s : r.labeled) CHECK(s.y == target_function(s.x));
  for (const Sample &s : r.labeled) {
    CHECK(s.x >= cfg.x_min);
    CHECK(s.x <= cfg.x_max);
  }
}

TEST_CASE("warped labels carry half the teacher error") {
  ToyConfig cfg;
  cfg.steps = 100;
  cfg.warped = 20;
  cfg.predicted = 0;
  const ToyReport r = run_basic_step(cfg, 1);
  ToyConfig pred = cfg;
  pred.warped = 0;
  pred.predicted = 20;
  const ToyReport p = run_basic_step(pred, 1);
  // same grid, same teacher, shuffled order: match by x
  for (const Sample &w : r.warped)
    for (const Sample &q : p.predicted)
      if (q.x == w.x)
        CHECK(std::abs(w.y - target_function(w.x)) ==
              doctest::Approx(0.5 * std::abs(q.y - target_function(q.x))).epsilon(1e-12));
}

TEST_CASE("no pseudo-labels gives identical students") {
  ToyConfig cfg;
  cfg.steps = 300;
  cfg.warped = 0;
  cfg.predicted = 0;
  const ToyReport r = run_basic_step(cfg, 2);
  CHECK(r.mae_f1 == r.mae_f2);
}

TEST_CASE("oracle teacher helps") {
  ToyConfig cfg;
  cfg.oracle_teacher = true;
  const ToyReport r = run_basic_step(cfg, 4);
  CHECK(r.mae_f2 <= r.mae_f1);
}

TEST_CASE("deterministic per seed") {
  ToyConfig cfg;
  cfg.steps = 100;
  const ToyReport a = run_basic_step(cfg, 9), b = run_basic_step(cfg, 9);
  CHECK(a.mae_f1 == b.mae_f1);
  CHECK(a.mae_f2 == b.mae_f2);
  CHECK(a.curve_f2 == b.curve_f2);
}

TEST_CASE("config validation") {
  ToyConfig cfg;
  cfg.hidden_width = 0;
  CHECK_THROWS_AS(run_basic_step(cfg, 0), std::domain_error);
}
