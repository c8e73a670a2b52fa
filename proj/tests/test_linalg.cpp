#include <doctest.h>

#include <random>

#include "gridforge/linalg.hpp"

using namespace gridforge;

namespace {

Eigen::MatrixXd random_stable(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  a -= (max_real_eigenvalue(a) + 0.5) * Eigen::MatrixXd::Identity(n, n);
  return a;
}

}  // namespace

TEST_CASE("eigenvalue helpers on a known matrix") {
  Eigen::Matrix2d a;
  a << -1.0, 3.0, 0.0, -2.0;
  CHECK(max_real_eigenvalue(a) == doctest::Approx(-1.0));
  CHECK(max_abs_eigenvalue(a) == doctest::Approx(2.0));
}

TEST_CASE("lyapunov solver residual") {
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    const Eigen::MatrixXd a = random_stable(6, seed);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(6, 6);
    const Eigen::MatrixXd p = solve_lyapunov(a, q);
    CHECK((p - p.transpose()).norm() < 1e-10 * p.norm());
    CHECK((a.transpose() * p + p * a + q).norm() < 1e-9 * p.norm() * a.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
    CHECK(es.eigenvalues()(0) > 0.0);  // Hurwitz A, positive Q
  }
}

TEST_CASE("balancing is a similarity: eigenvalues preserved") {
  const Eigen::MatrixXd a = random_stable(5, 42);
  Eigen::MatrixXd b = Eigen::MatrixXd::Random(5, 2) * 1e4;
  Eigen::MatrixXd c = Eigen::MatrixXd::Random(2, 5) * 1e-3;
  const Eigen::VectorXd s = balance_system(a, b, c);
  CHECK((s.array() > 0.0).all());
  const Eigen::MatrixXd ab = s.cwiseInverse().asDiagonal() * a * s.asDiagonal();
  CHECK(max_real_eigenvalue(ab) == doctest::Approx(max_real_eigenvalue(a)).epsilon(1e-8));
}

TEST_CASE("sym produces the symmetric part") {
  Eigen::Matrix2d m;
  m << 1.0, 4.0, 2.0, 5.0;
  const Eigen::MatrixXd ms = sym(m);
  CHECK(ms(0, 1) == doctest::Approx(3.0));
  CHECK((ms - ms.transpose()).norm() == 0.0);
}
