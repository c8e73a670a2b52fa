#include "gridforge/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace gridforge {

double max_real_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

double max_abs_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const auto n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");

  // A^T P + P A = -Q.  With A^T = U T U^H (complex Schur, T upper
  // triangular) and Y = U^H P U, Qh = U^H Q U:
  //   T Y + Y T^H = -Qh, solved column by column of Y in reverse order.
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(a.transpose());
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("solve_lyapunov: Schur decomposition failed");
  const Eigen::MatrixXcd t = schur.matrixT();
  const Eigen::MatrixXcd u = schur.matrixU();
  Eigen::MatrixXcd qh = u.adjoint() * q.cast<std::complex<double>>() * u;

  // T Y + Y T^H = -Qh. Column j: (T + conj(t_jj) I) y_j = -qh_j - sum_{k>j} y_k conj(t_jk).
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -qh.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= y.col(k) * std::conj(t(j, k));
    Eigen::MatrixXcd lhs = t;
    lhs.diagonal().array() += std::conj(t(j, j));
    y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXd p = (u * y * u.adjoint()).real();
  return sym(p);
}

Eigen::VectorXd balance_system(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& c, int sweeps) {
  const auto n = a.rows();
  Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < sweeps; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double r2 = 0.0, c2 = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        const double aik = a(i, k) * s(k);
        const double aki = a(k, i) / s(k);
        r2 += aik * aik;
        c2 += aki * aki;
      }
      r2 += b.row(i).squaredNorm();
      c2 += c.col(i).squaredNorm();
      const double r = std::sqrt(r2) / s(i);
      const double cc = std::sqrt(c2) * s(i);
      if (r > 1e-300 && cc > 1e-300) {
        double f = std::sqrt(r / cc);
        f = std::clamp(f, 0.5, 2.0);
        s(i) *= f;
      }
    }
  }
  return s;
}

}  // namespace gridforge
