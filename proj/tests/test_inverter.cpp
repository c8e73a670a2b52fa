#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "gridforge/certify.hpp"
#include "gridforge/inverter.hpp"
#include "gridforge/linalg.hpp"

using namespace gridforge;

TEST_CASE("filter plant matrix entries") {
  const PlantSS p = assemble_plant(gftest::filter_params(), gftest::frame());
  CHECK(p.a(0, 0) == doctest::Approx(-12.5));
  CHECK(p.a(0, 2) == doctest::Approx(-125.0));
  CHECK(p.a(2, 0) == doctest::Approx(20000.0));
  CHECK(p.a(2, 2) == doctest::Approx(-1.0 / (350.0 * 50e-6)).epsilon(1e-9));
  CHECK(p.a(2, 2) == doctest::Approx(-57.1429).epsilon(1e-4));
  CHECK(p.a(0, 1) == doctest::Approx(314.159265).epsilon(1e-8));
  CHECK(p.a(1, 0) == doctest::Approx(-314.159265).epsilon(1e-8));

  // Bridge voltage enters the current states only.
  CHECK(p.b_u(0, 0) == doctest::Approx(125.0));
  CHECK(p.b_u(1, 1) == doctest::Approx(125.0));
  CHECK(p.b_u.bottomRows(2).norm() == 0.0);

  // Network current enters the voltage states only.
  CHECK(p.b_w(2, 0) == doctest::Approx(1.0 / 50e-6));
  CHECK(p.b_w.topRows(2).norm() == 0.0);

  // Output selects the capacitor voltage.
  Eigen::Matrix<double, 2, 4> sel = Eigen::Matrix<double, 2, 4>::Zero();
  sel(0, 2) = sel(1, 3) = 1.0;
  CHECK((p.c - sel).norm() == 0.0);
}

TEST_CASE("plant rejects nonpositive parameters") {
  CHECK_THROWS(assemble_plant({0.1, 0.0, 1.0 / 350.0, 50e-6}, gftest::frame()));
  CHECK_THROWS(assemble_plant({0.1, 8e-3, 1.0 / 350.0, 0.0}, gftest::frame()));
  CHECK_THROWS(assemble_plant({-0.1, 8e-3, 1.0 / 350.0, 50e-6}, gftest::frame()));
}

TEST_CASE("virtual impedance matrix") {
  const VirtualImpedance zv{0.5, 1.0};
  Eigen::Matrix2d expect;
  expect << 0.5, 1.0, -1.0, 0.5;
  CHECK((zv.matrix() - expect).norm() == 0.0);
}

TEST_CASE("augmentation wires the integrator") {
  const PlantSS p = assemble_plant(gftest::filter_params(), gftest::frame());
  const AugmentedPlant ap = augment(p, gftest::virtual_impedance());

  CHECK((ap.a.topLeftCorner<4, 4>() - p.a).norm() == 0.0);
  // zeta' = v - v_ref + Z i, with w = -i: zeta rows of B_w are -Z, the rows
  // acting on the voltage states are I2, and B_ref injects -I2.
  Eigen::Matrix<double, 2, 4> vrows = ap.a.block<2, 4>(4, 0);
  CHECK((vrows - p.c).norm() == 0.0);
  CHECK((ap.b_w.bottomRows<2>() + ap.z).norm() == 0.0);
  CHECK((ap.b_ref.bottomRows<2>() + Eigen::Matrix2d::Identity()).norm() == 0.0);
  CHECK(ap.b_ref.topRows<4>().norm() == 0.0);
  CHECK((ap.c.leftCols<4>() - p.c).norm() == 0.0);
  CHECK(ap.c.rightCols<2>().norm() == 0.0);

  // A vanishing impedance is rejected (the droop law would degenerate).
  CHECK_THROWS(augment(p, VirtualImpedance{0.0, 0.0}));
}

TEST_CASE("equilibrium droop identity") {
  const AugmentedPlant ap = gftest::reference_plant();
  const Eigen::Vector2d v_ref(381.0, 0.0);
  const Eigen::Vector2d i_star(10.0, 0.0);
  const Eigen::Vector2d v_star = v_ref - ap.z * i_star;
  CHECK(v_star(0) == doctest::Approx(376.0));
  CHECK(v_star(1) == doctest::Approx(10.0));
}

TEST_CASE("unactuated loop keeps the integrator poles at zero") {
  const AugmentedPlant ap = gftest::reference_plant();
  ControllerGains zero;
  zero.k.setZero();
  zero.m.setZero();
  const ClosedLoopBus clb = close_loop(ap, zero);
  CHECK((clb.a_c - ap.a).norm() == 0.0);
  Eigen::EigenSolver<Eigen::MatrixXd> es(clb.a_c);
  int at_zero = 0;
  for (int i = 0; i < 6; ++i)
    if (std::abs(es.eigenvalues()(i)) < 1e-6) ++at_zero;
  CHECK(at_zero == 2);
}

TEST_CASE("reference gains satisfy the eigenvalue constraint") {
  const ClosedLoopBus clb = gftest::reference_loop();
  CHECK(max_real_eigenvalue(clb.a_c) <= -5.0);
}

TEST_CASE("closed-loop reconstruction") {
  const AugmentedPlant ap = gftest::reference_plant();
  const ControllerGains g = gftest::reference_gains();
  const ClosedLoopBus clb = close_loop(ap, g);
  CHECK((clb.a_c + ap.b_u * g.k - ap.a).norm() < 1e-12 * ap.a.norm());
  CHECK((clb.b_c + ap.b_u * g.m - ap.b_w).norm() < 1e-12 * ap.b_w.norm());
  CHECK((clb.c_c - ap.c).norm() == 0.0);
  CHECK(clb.d_c.norm() == 0.0);
  CHECK((clb.b_ref - ap.b_ref).norm() == 0.0);
}

TEST_CASE("bare filter is passive") {
  const PlantSS p = assemble_plant(gftest::filter_params(), gftest::frame());
  CHECK(osp_freq_test(p.a, p.b_w, p.c, 0.0));
}

TEST_CASE("closed loop is affine in the gains") {
  const AugmentedPlant ap = gftest::reference_plant();
  ControllerGains g = gftest::reference_gains();
  const ClosedLoopBus base = close_loop(ap, g);
  for (auto [r, c] : {std::pair{0, 0}, {1, 3}, {0, 5}}) {
    ControllerGains g2 = g;
    g2.k(r, c) += 1.0;
    const ClosedLoopBus bumped = close_loop(ap, g2);
    Eigen::MatrixXd diff = bumped.a_c - base.a_c;
    Eigen::MatrixXd expect = -ap.b_u.col(r) * Eigen::RowVectorXd::Unit(6, c);
    CHECK((diff - expect).norm() < 1e-12 * std::max(1.0, expect.norm()));
  }
}
