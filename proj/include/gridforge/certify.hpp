#pragma once

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "gridforge/inverter.hpp"

namespace gridforge {

/// Constraint set of the gain-tuning problem.
struct TuningSpec {
  double p_max = 125.0;      // max absolute controller gain entry
  double lambda_max = -5.0;  // max allowed eigenvalue real part, 1/s
  double gamma = 1.5;        // frequency-response bound gain
  double omega_c = 1e5;      // frequency-response bound bandwidth, rad/s
  double rho_min = 0.39;     // required output-strict-passivity index
};

/// Frequency sweep policy: log-spaced base grid plus local refinement around
/// extrema of the tested quantity.
struct FreqGrid {
  int points = 400;
  double omega_min = 1e-1;
  double omega_max = 1e7;
  int refine_rounds = 3;
  int refine_points = 24;
};

struct PassivityCertificate {
  Eigen::MatrixXd p;   // symmetric positive definite storage matrix
  double rho = 0.0;
  double lmi_max_eig = 0.0;  // largest eigenvalue of the certified block matrix
  double p_min_eig = 0.0;
};

struct FreqBoundResult {
  bool ok = false;
  double worst_omega = 0.0;
  double worst_gap = 0.0;  // sup over the grid of sigma_max(G) - bound
};

struct CertificationReport {
  bool hurwitz_ok = false;
  double hurwitz_margin = 0.0;
  bool gains_ok = false;
  double max_abs_gain = 0.0;
  bool freq_ok = false;
  double worst_omega = 0.0;
  double worst_gap = 0.0;
  bool osp_ok = false;
  double certified_rho = 0.0;
  bool paths_consistent = true;  // LMI search vs frequency test agreement
  std::optional<PassivityCertificate> certificate;

  bool all_ok() const { return hurwitz_ok && gains_ok && freq_ok && osp_ok; }
};

std::pair<bool, double> check_hurwitz(const Eigen::MatrixXd& a, double lambda_max);

std::pair<bool, double> check_gain_bounds(const ControllerGains& gains, double p_max);

/// sigma_max(C (jwI - A)^-1 B) <= |gamma w_c / (jw + w_c)| over the refined
/// grid. Throws if a_c is not Hurwitz (unbounded response).
FreqBoundResult check_freq_bound(const ClosedLoopBus& clb, double gamma, double omega_c,
                                 const FreqGrid& grid = {});

/// Output strict passivity at index rho: G(jw) + G(jw)^H - 2 rho G^H G psd on
/// the refined grid AND the Popov-function pencil has no purely imaginary
/// generalized eigenvalues (exact boundary-crossing test). When `coarse` the
/// pencil test and refinement are skipped (search-loop use only; final
/// certificates must use the full test).
bool osp_freq_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                   double rho, const FreqGrid& grid = {}, bool coarse = false);
bool osp_freq_test(const ClosedLoopBus& clb, double rho, const FreqGrid& grid = {},
                   bool coarse = false);

/// Search for P = P^T > 0 with [[A^T P + P A + 2 rho C^T C, P B - C^T],
/// [B^T P - C, 0]] <= 0, by alternating projections restricted to the affine
/// subspace {P : P B = C^T} of a diagonally balanced copy of the system.
/// Every returned certificate is re-verified by direct eigenvalue computation
/// in the original coordinates (tolerance 1e-8 relative to the block-matrix
/// Frobenius norm). nullopt means the budget was exhausted without a
/// verifiable certificate (indeterminate, not proven infeasible).
std::optional<PassivityCertificate> lmi_feasibility(const Eigen::MatrixXd& a,
                                                    const Eigen::MatrixXd& b,
                                                    const Eigen::MatrixXd& c, double rho,
                                                    int max_iters = 60000);
std::optional<PassivityCertificate> lmi_feasibility(const ClosedLoopBus& clb, double rho,
                                                    int max_iters = 60000);

/// Largest rho passing osp_freq_test, by bisection. Throws if the system is
/// not passive at rho = 0.
double max_osp_index(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                     double tol = 1e-4, const FreqGrid& grid = {}, bool coarse = false);
double max_osp_index(const ClosedLoopBus& clb, double tol = 1e-4, const FreqGrid& grid = {},
                     bool coarse = false);

/// Run every check of the tuning problem on one candidate.
CertificationReport certify_bus(const ClosedLoopBus& clb, const ControllerGains& gains,
                                const TuningSpec& spec, const FreqGrid& grid = {},
                                int lmi_iters = 300000);

}  // namespace gridforge
