#pragma once

#include <Eigen/Dense>

namespace gridforge {

/// Largest real part over the eigenvalues of a square matrix.
double max_real_eigenvalue(const Eigen::MatrixXd& a);

/// Largest eigenvalue magnitude (spectral radius bound used for dt guards).
double max_abs_eigenvalue(const Eigen::MatrixXd& a);

/// Solve the continuous Lyapunov equation A^T P + P A = -Q for symmetric Q,
/// via complex Schur decomposition (Bartels-Stewart). A must have no pair of
/// eigenvalues summing to zero; in practice A is Hurwitz here.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// Diagonal similarity scaling equalizing row/column norms of the system
/// (A,B,C). Returns scales s so that diag(1/s)*A*diag(s), diag(1/s)*B,
/// C*diag(s) is better conditioned for iterative certificate search.
Eigen::VectorXd balance_system(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& c, int sweeps = 50);

/// Symmetric part.
inline Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace gridforge
