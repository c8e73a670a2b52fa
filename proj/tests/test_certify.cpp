#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "gridforge/certify.hpp"
#include "gridforge/linalg.hpp"
#include "gridforge/synthesize.hpp"

using namespace gridforge;

namespace {

/// Scalar lag x' = -x + w, z = x: output strict passivity index exactly 1.
struct ScalarLag {
  Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(1, 1);
};

ControllerGains perturbed_gains(GaussianRng& rng, double mag) {
  ControllerGains g = gftest::reference_gains();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 6; ++j) g.k(i, j) += mag * rng.normal();
    for (int j = 0; j < 2; ++j) g.m(i, j) += mag * rng.normal();
  }
  return g;
}

}  // namespace

TEST_CASE("hurwitz check") {
  const auto [ok, margin] = check_hurwitz(-Eigen::Matrix2d::Identity(), -0.5);
  CHECK(ok);
  CHECK(margin == doctest::Approx(0.5));

  ControllerGains zero;
  zero.k.setZero();
  zero.m.setZero();
  const ClosedLoopBus open = close_loop(gftest::reference_plant(), zero);
  CHECK_FALSE(check_hurwitz(open.a_c, -5.0).first);

  CHECK(check_hurwitz(gftest::reference_loop().a_c, -5.0).first);
}

TEST_CASE("gain bound check") {
  ControllerGains g = gftest::reference_gains();
  auto [ok, mx] = check_gain_bounds(g, 125.0);
  CHECK(ok);
  CHECK(mx == doctest::Approx(124.0));

  ControllerGains doubled = g;
  doubled.k *= 2.0;
  doubled.m *= 2.0;
  auto [ok2, mx2] = check_gain_bounds(doubled, 125.0);
  CHECK_FALSE(ok2);
  CHECK(mx2 == doctest::Approx(248.0));

  ControllerGains zero;
  zero.k.setZero();
  zero.m.setZero();
  CHECK(check_gain_bounds(zero, 125.0).first);
}

TEST_CASE("frequency bound on the reference loop") {
  const ClosedLoopBus clb = gftest::reference_loop();
  const FreqBoundResult r = check_freq_bound(clb, 1.5, 1e5);
  CHECK(r.ok);

  // Dense sweep oracle at 10x resolution agrees.
  FreqGrid dense;
  dense.points = 4000;
  CHECK(check_freq_bound(clb, 1.5, 1e5, dense).ok);

  // The bound value at omega = 0 is gamma itself; a loop with DC gain above
  // gamma must fail.
  const Eigen::MatrixXcd g0 = clb.c_c * (-clb.a_c).cast<std::complex<double>>()
                                  .partialPivLu()
                                  .solve(clb.b_c.cast<std::complex<double>>());
  const double dc = g0.jacobiSvd().singularValues()(0);
  CHECK_FALSE(check_freq_bound(clb, dc / 2.0, 1e5).ok);
}

TEST_CASE("frequency bound requires a Hurwitz loop") {
  ClosedLoopBus unstable = gftest::reference_loop();
  unstable.a_c = -unstable.a_c;
  CHECK_THROWS(check_freq_bound(unstable, 1.5, 1e5));
}

TEST_CASE("scalar lag osp index") {
  const ScalarLag s;
  CHECK(osp_freq_test(s.a, s.b, s.c, 0.99));
  CHECK_FALSE(osp_freq_test(s.a, s.b, s.c, 1.01));
  const double rho_star = max_osp_index(s.a, s.b, s.c);
  CHECK(std::abs(rho_star - 1.0) <= 1e-4);
}

TEST_CASE("memoryless identity map admits rho up to one") {
  // G(jw) = I2: the passivity surplus reads 2I - 2 rho I, nonnegative iff
  // rho <= 1 -- closed-form check of the test's defining inequality.
  for (double rho : {0.0, 0.5, 1.0, 1.5}) {
    const Eigen::Matrix2d surplus = 2.0 * (1.0 - rho) * Eigen::Matrix2d::Identity();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(surplus);
    CHECK((es.eigenvalues()(0) >= 0.0) == (rho <= 1.0));
  }
}

TEST_CASE("reference loop passes just under rho = 0.4") {
  CHECK(osp_freq_test(gftest::reference_loop(), 0.399));
}

TEST_CASE("reference loop maximal rho near 0.4") {
  const double rho_star = max_osp_index(gftest::reference_loop());
  CHECK(rho_star >= 0.4 - 1e-3);
  CHECK(rho_star < 0.45);
}

TEST_CASE("scalar lag storage matrix is recovered exactly") {
  const ScalarLag s;
  const auto cert = lmi_feasibility(s.a, s.b, s.c, 0.5);
  REQUIRE(cert.has_value());
  CHECK(cert->p(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
  // Direct substitution: [[-2 + 2*0.5, 0], [0, 0]] <= 0 within the verifier's
  // scaled tolerance.
  CHECK(cert->lmi_max_eig <= 1e-7);
  CHECK(cert->p_min_eig > 0.0);
}

TEST_CASE("reference loop lmi feasible at 0.399, not at 2.0") {
  const ClosedLoopBus clb = gftest::reference_loop();
  const auto good = lmi_feasibility(clb, 0.399);
  REQUIRE(good.has_value());
  CHECK((good->p - good->p.transpose()).norm() < 1e-10 * good->p.norm());
  CHECK(good->p_min_eig > 0.0);

  CHECK_FALSE(osp_freq_test(clb, 2.0));
  CHECK_FALSE(lmi_feasibility(clb, 2.0, 5000).has_value());
}

TEST_CASE("certificates are verifiable by direct substitution") {
  const ClosedLoopBus clb = gftest::reference_loop();
  const auto cert = lmi_feasibility(clb, 0.39);
  REQUIRE(cert.has_value());
  const Eigen::MatrixXd& p = cert->p;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(8, 8);
  f.topLeftCorner(6, 6) =
      clb.a_c.transpose() * p + p * clb.a_c + 2.0 * 0.39 * clb.c_c.transpose() * clb.c_c;
  f.topRightCorner(6, 2) = p * clb.b_c - clb.c_c.transpose();
  f.bottomLeftCorner(2, 6) = f.topRightCorner(6, 2).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
  CHECK(es.eigenvalues()(7) <= 1e-8 * f.norm());
}

TEST_CASE("lmi and frequency paths agree on perturbed loops") {
  const AugmentedPlant ap = gftest::reference_plant();
  GaussianRng rng(2718);
  int checked = 0;
  for (int s = 0; s < 60 && checked < 30; ++s) {
    ControllerGains g = perturbed_gains(rng, 5.0 + 45.0 * rng.uniform());
    const ClosedLoopBus clb = close_loop(ap, g);
    if (!check_hurwitz(clb.a_c, -1e-3).first) continue;
    double rho_lo, rho_hi;
    if (osp_freq_test(clb, 0.0)) {
      const double rho_star = max_osp_index(clb);
      rho_lo = 0.9 * rho_star;
      rho_hi = 1.1 * rho_star + 0.01;
    } else {
      rho_lo = -1.0;  // skip feasible side
      rho_hi = 0.1;
    }
    if (rho_lo > 0.0) {
      CHECK(osp_freq_test(clb, rho_lo));
      CHECK(lmi_feasibility(clb, rho_lo).has_value());
    }
    CHECK_FALSE(osp_freq_test(clb, rho_hi));
    CHECK_FALSE(lmi_feasibility(clb, rho_hi, 2000).has_value());
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("osp monotone in rho") {
  const AugmentedPlant ap = gftest::reference_plant();
  GaussianRng rng(99);
  int tested = 0;
  for (int s = 0; s < 20 && tested < 8; ++s) {
    ControllerGains g = perturbed_gains(rng, 10.0 * rng.uniform());
    const ClosedLoopBus clb = close_loop(ap, g);
    if (!check_hurwitz(clb.a_c, -1e-3).first || !osp_freq_test(clb, 0.0)) continue;
    const double rho_star = max_osp_index(clb);
    CHECK(osp_freq_test(clb, 0.5 * rho_star));
    CHECK(osp_freq_test(clb, 0.25 * rho_star));
    ++tested;
  }
  CHECK(tested >= 4);
}

TEST_CASE("full certification of the reference controller") {
  const CertificationReport rep =
      certify_bus(gftest::reference_loop(), gftest::reference_gains(), TuningSpec{});
  CHECK(rep.hurwitz_ok);
  CHECK(rep.gains_ok);
  CHECK(rep.freq_ok);
  CHECK(rep.osp_ok);
  CHECK(rep.paths_consistent);
  CHECK(rep.all_ok());
  REQUIRE(rep.certificate.has_value());
  CHECK(rep.certified_rho >= 0.39);
  CHECK(std::abs(rep.certified_rho - 0.4) <= 0.01);
}

TEST_CASE("certification reports individual failures") {
  const AugmentedPlant ap = gftest::reference_plant();

  ControllerGains zero;
  zero.k.setZero();
  zero.m.setZero();
  const CertificationReport open = certify_bus(close_loop(ap, zero), zero, TuningSpec{});
  CHECK_FALSE(open.hurwitz_ok);
  CHECK(open.gains_ok);
  CHECK_FALSE(open.all_ok());

  // One oversized entry: only the gain bound trips (the eigenvalue,
  // frequency, and passivity requirements still hold at this rho floor).
  ControllerGains big = gftest::reference_gains();
  big.k(0, 4) = 200.0;
  TuningSpec relaxed;
  relaxed.rho_min = 0.35;
  const CertificationReport rep = certify_bus(close_loop(ap, big), big, relaxed);
  CHECK_FALSE(rep.gains_ok);
  CHECK(rep.hurwitz_ok);
  CHECK(rep.freq_ok);
  CHECK(rep.osp_ok);
  CHECK_FALSE(rep.all_ok());
}
