#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "gridforge/synthesize.hpp"

using namespace gridforge;

TEST_CASE("deterministic rng stream") {
  GaussianRng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  GaussianRng c(124);
  bool same = true;
  for (int i = 0; i < 10; ++i) same &= (a.uniform() == c.uniform());
  CHECK_FALSE(same);
}

TEST_CASE("reference gains evaluate near their certified index") {
  const AugmentedPlant ap = gftest::reference_plant();
  const double obj = evaluate_candidate(gftest::reference_gains(), ap, TuningSpec{});
  CHECK(obj >= 0.39);
  CHECK(obj < 0.45);
}

TEST_CASE("unstabilized candidate is dominated by the hurwitz penalty") {
  const AugmentedPlant ap = gftest::reference_plant();
  ControllerGains zero;
  zero.k.setZero();
  zero.m.setZero();
  CHECK(evaluate_candidate(zero, ap, TuningSpec{}) < 0.0);
}

TEST_CASE("gain hinge penalty is exact") {
  const AugmentedPlant ap = gftest::reference_plant();
  ControllerGains big = gftest::reference_gains();
  big.k(0, 0) = 200.0;
  TuningSpec tight;          // p_max 125
  TuningSpec loose = tight;  // same loop, bound moved out of the way
  loose.p_max = 1000.0;
  const double with_pen = evaluate_candidate(big, ap, tight);
  const double without = evaluate_candidate(big, ap, loose);
  CHECK(without - with_pen == doctest::Approx(0.01 * (200.0 - 125.0)).epsilon(1e-9));
}

TEST_CASE("small synthesis run is reproducible and sound") {
  const AugmentedPlant ap = gftest::reference_plant();
  SynthesisConfig cfg;
  cfg.starts = 2;
  cfg.budget_per_start = 300;
  cfg.seed = 7;

  const SynthesisResult r1 = synthesize_controller(ap, cfg);
  const SynthesisResult r2 = synthesize_controller(ap, cfg);
  CHECK((r1.gains.k - r2.gains.k).norm() == 0.0);
  CHECK((r1.gains.m - r2.gains.m).norm() == 0.0);
  CHECK(r1.start_index == r2.start_index);
  CHECK(r1.feasible == r2.feasible);

  // Best-so-far history is nondecreasing.
  for (std::size_t i = 1; i < r1.objective_history.size(); ++i)
    CHECK(r1.objective_history[i] >= r1.objective_history[i - 1]);

  // A feasible flag must survive independent re-certification.
  if (r1.feasible) {
    const CertificationReport rep =
        certify_bus(close_loop(ap, r1.gains), r1.gains, cfg.spec);
    CHECK(rep.all_ok());
  }
}

TEST_CASE("impossible gain budget is flagged infeasible") {
  const AugmentedPlant ap = gftest::reference_plant();
  SynthesisConfig cfg;
  cfg.starts = 1;
  cfg.budget_per_start = 150;
  cfg.spec.p_max = 0.001;
  const SynthesisResult r = synthesize_controller(ap, cfg);
  CHECK_FALSE(r.feasible);
}

TEST_CASE("config validation") {
  const AugmentedPlant ap = gftest::reference_plant();
  SynthesisConfig bad;
  bad.starts = 0;
  CHECK_THROWS(synthesize_controller(ap, bad));
  SynthesisConfig tiny;
  tiny.budget_per_start = 10;
  CHECK_THROWS(synthesize_controller(ap, tiny));
  SynthesisConfig steps;
  steps.step_min = steps.step_init;
  CHECK_THROWS(synthesize_controller(ap, steps));
}
