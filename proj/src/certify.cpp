#include "gridforge/certify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gridforge/linalg.hpp"

namespace gridforge {

namespace {

using Cplx = std::complex<double>;

Eigen::MatrixXcd transfer(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const Eigen::MatrixXd& c, double omega) {
  const auto n = a.rows();
  Eigen::MatrixXcd lhs = -a.cast<Cplx>();
  lhs.diagonal().array() += Cplx(0.0, omega);
  return c.cast<Cplx>() * lhs.partialPivLu().solve(b.cast<Cplx>());
}

struct SweepResult {
  double min_val = 0.0;
  double arg_omega = 0.0;
  double scale = 0.0;  // largest |value| seen, for relative tolerances
};

/// Minimum of f over a log grid, with local refinement around every local
/// minimum of the sampled values.
SweepResult sweep_min(const std::function<double(double)>& f, const FreqGrid& grid, bool coarse) {
  std::vector<std::pair<double, double>> pts;  // (omega, value), sorted by omega
  const int n0 = coarse ? std::max(grid.points / 2, 50) : grid.points;
  pts.reserve(n0 + 256);
  const double lo = std::log10(grid.omega_min), hi = std::log10(grid.omega_max);
  for (int i = 0; i < n0; ++i) {
    const double w = std::pow(10.0, lo + (hi - lo) * i / (n0 - 1));
    pts.emplace_back(w, f(w));
  }
  const int rounds = coarse ? 0 : grid.refine_rounds;
  for (int r = 0; r < rounds; ++r) {
    std::vector<std::pair<double, double>> extra;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const bool left_ok = (i == 0) || pts[i].second <= pts[i - 1].second;
      const bool right_ok = (i + 1 == pts.size()) || pts[i].second <= pts[i + 1].second;
      if (!(left_ok && right_ok)) continue;
      const double wl = pts[i == 0 ? 0 : i - 1].first;
      const double wr = pts[std::min(i + 1, pts.size() - 1)].first;
      const double ll = std::log10(wl), lr = std::log10(wr);
      for (int k = 1; k <= grid.refine_points; ++k) {
        const double w = std::pow(10.0, ll + (lr - ll) * k / (grid.refine_points + 1));
        extra.emplace_back(w, f(w));
      }
    }
    pts.insert(pts.end(), extra.begin(), extra.end());
    std::sort(pts.begin(), pts.end());
  }
  SweepResult res;
  res.min_val = std::numeric_limits<double>::infinity();
  for (const auto& [w, v] : pts) {
    if (v < res.min_val) {
      res.min_val = v;
      res.arg_omega = w;
    }
    res.scale = std::max(res.scale, std::abs(v));
  }
  return res;
}

double popov_min_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                     double rho, double omega) {
  const Eigen::MatrixXcd g = transfer(a, b, c, omega);
  const Eigen::MatrixXcd pi = g + g.adjoint() - 2.0 * rho * (g.adjoint() * g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pi, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Exact boundary-crossing test: the Popov function Pi(s) = G(-s)^T + G(s)
/// - 2 rho G(-s)^T G(s) loses rank on the imaginary axis iff the pencil below
/// has a finite purely imaginary generalized eigenvalue.
bool pencil_has_imaginary_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const Eigen::MatrixXd& c, double rho) {
  const auto n = a.rows();
  const auto m = b.cols();
  const auto nn = 2 * n + m;
  Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(nn, nn);
  pm.topLeftCorner(n, n) = a;
  pm.block(n, 0, n, n) = 2.0 * rho * (c.transpose() * c);
  pm.block(n, n, n, n) = -a.transpose();
  pm.block(0, 2 * n, n, m) = b;
  pm.block(n, 2 * n, n, m) = -c.transpose();
  pm.block(2 * n, 0, m, n) = c;
  pm.block(2 * n, n, m, n) = b.transpose();
  Eigen::MatrixXd pn = Eigen::MatrixXd::Zero(nn, nn);
  pn.topLeftCorner(2 * n, 2 * n).setIdentity();

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
  ges.compute(pm, pn, /*computeEigenvectors=*/false);
  for (Eigen::Index i = 0; i < ges.alphas().size(); ++i) {
    const Cplx alpha = ges.alphas()(i);
    const double beta = ges.betas()(i);
    if (std::abs(beta) <= 1e-10 * std::max(1.0, std::abs(alpha))) continue;  // at infinity
    const Cplx lambda = alpha / beta;
    if (std::abs(lambda.real()) <= 1e-7 * std::max(1.0, std::abs(lambda))) return true;
  }
  return false;
}

void require_hurwitz(const Eigen::MatrixXd& a, const char* who) {
  if (max_real_eigenvalue(a) >= 0.0)
    throw std::invalid_argument(std::string(who) + ": matrix is not Hurwitz (unbounded response)");
}

std::optional<PassivityCertificate> verify_certificate(const Eigen::MatrixXd& a,
                                                       const Eigen::MatrixXd& b,
                                                       const Eigen::MatrixXd& c, double rho,
                                                       const Eigen::MatrixXd& p) {
  const auto n = a.rows();
  const auto m = b.cols();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n + m, n + m);
  f.topLeftCorner(n, n) = a.transpose() * p + p * a + 2.0 * rho * (c.transpose() * c);
  f.topRightCorner(n, m) = p * b - c.transpose();
  f.bottomLeftCorner(m, n) = f.topRightCorner(n, m).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ef(f, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(p, Eigen::EigenvaluesOnly);
  const double max_eig = ef.eigenvalues()(n + m - 1);
  const double p_min = ep.eigenvalues()(0);
  if (max_eig <= 1e-8 * std::max(f.norm(), 1e-12) && p_min > 0.0)
    return PassivityCertificate{sym(p), rho, max_eig, p_min};
  return std::nullopt;
}

/// Stabilizing solution of the eps-regularized KYP Riccati equation
/// A^T P + P A + 2 rho C^T C + (P B - C^T)(B^T P - C)/(2 eps) = 0,
/// whose solutions approach the Lur'e set {P : F(P) <= 0} as eps -> 0. Solved
/// through the extended matrix pencil (no inversion of the 2 eps block), via
/// the deflating subspace spanned by the finite stable eigenvectors.
std::optional<Eigen::MatrixXd> riccati_kyp(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                           const Eigen::MatrixXd& c, double rho, double eps) {
  const auto n = a.rows();
  const auto m = b.cols();
  const auto nn = 2 * n + m;
  // Pencil of the Hamiltonian boundary problem with costate lambda = P x:
  //   x' = A x + B u,  lambda' = -2 rho C^T C x - A^T lambda + C^T u,
  //   0 = -C x + B^T lambda - 2 eps u  (so u = (B^T lambda - C x)/(2 eps)).
  Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(nn, nn);
  pm.topLeftCorner(n, n) = a;
  pm.block(0, 2 * n, n, m) = b;
  pm.block(n, 0, n, n) = -2.0 * rho * (c.transpose() * c);
  pm.block(n, n, n, n) = -a.transpose();
  pm.block(n, 2 * n, n, m) = c.transpose();
  pm.block(2 * n, 0, m, n) = -c;
  pm.block(2 * n, n, m, n) = b.transpose();
  pm.block(2 * n, 2 * n, m, m) = -2.0 * eps * Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd pn = Eigen::MatrixXd::Zero(nn, nn);
  pn.topLeftCorner(2 * n, 2 * n).setIdentity();

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
  ges.compute(pm, pn, /*computeEigenvectors=*/true);
  Eigen::MatrixXcd v1(n, n), v2(n, n);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < ges.alphas().size() && found < n; ++i) {
    const Cplx alpha = ges.alphas()(i);
    const double beta = ges.betas()(i);
    if (std::abs(beta) <= 1e-10 * std::max(1.0, std::abs(alpha))) continue;  // at infinity
    if ((alpha / beta).real() >= 0.0) continue;
    v1.col(found) = ges.eigenvectors().col(i).head(n);
    v2.col(found) = ges.eigenvectors().col(i).segment(n, n);
    ++found;
  }
  if (found != n) return std::nullopt;  // no stabilizing deflating subspace
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(v1.transpose());
  if (!lu.isInvertible()) return std::nullopt;
  // P = V2 V1^-1 realizes lambda = P x on the deflating subspace.
  const Eigen::MatrixXd p = lu.solve(v2.transpose()).transpose().real();
  return sym(p);
}

}  // namespace

std::pair<bool, double> check_hurwitz(const Eigen::MatrixXd& a, double lambda_max) {
  const double margin = lambda_max - max_real_eigenvalue(a);
  return {margin >= 0.0, margin};
}

std::pair<bool, double> check_gain_bounds(const ControllerGains& gains, double p_max) {
  const double mx = std::max(gains.k.cwiseAbs().maxCoeff(), gains.m.cwiseAbs().maxCoeff());
  return {mx <= p_max, mx};
}

FreqBoundResult check_freq_bound(const ClosedLoopBus& clb, double gamma, double omega_c,
                                 const FreqGrid& grid) {
  require_hurwitz(clb.a_c, "check_freq_bound");
  auto margin = [&](double w) {
    const Eigen::MatrixXcd g = transfer(clb.a_c, clb.b_c, clb.c_c, w);
    const double smax = g.jacobiSvd().singularValues()(0);
    const double bound = gamma * omega_c / std::hypot(w, omega_c);
    return bound - smax;
  };
  const SweepResult sw = sweep_min(margin, grid, /*coarse=*/false);
  return FreqBoundResult{sw.min_val >= 0.0, sw.arg_omega, -sw.min_val};
}

bool osp_freq_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                   double rho, const FreqGrid& grid, bool coarse) {
  require_hurwitz(a, "osp_freq_test");
  auto f = [&](double w) { return popov_min_eig(a, b, c, rho, w); };
  SweepResult sw = sweep_min(f, grid, coarse);
  const double at_zero = f(0.0);
  sw.min_val = std::min(sw.min_val, at_zero);
  sw.scale = std::max(sw.scale, std::abs(at_zero));
  if (sw.min_val < -1e-12 * std::max(1.0, sw.scale)) return false;
  if (coarse) return true;
  return !pencil_has_imaginary_eig(a, b, c, rho);
}

bool osp_freq_test(const ClosedLoopBus& clb, double rho, const FreqGrid& grid, bool coarse) {
  return osp_freq_test(clb.a_c, clb.b_c, clb.c_c, rho, grid, coarse);
}

std::optional<PassivityCertificate> lmi_feasibility(const Eigen::MatrixXd& a,
                                                    const Eigen::MatrixXd& b,
                                                    const Eigen::MatrixXd& c, double rho,
                                                    int max_iters) {
  const auto n = a.rows();
  const auto m = b.cols();
  if (a.cols() != n || b.rows() != n || c.cols() != n || c.rows() != m)
    throw std::invalid_argument("lmi_feasibility: dimension mismatch");
  require_hurwitz(a, "lmi_feasibility");

  const Eigen::VectorXd s = balance_system(a, b, c);
  const Eigen::MatrixXd ab = s.cwiseInverse().asDiagonal() * a * s.asDiagonal();
  const Eigen::MatrixXd bb = s.cwiseInverse().asDiagonal() * b;
  const Eigen::MatrixXd cb = c * s.asDiagonal();
  // Balancing is a congruence diag(S, I) on the block matrix, so a balanced
  // certificate Pb maps back as P = S^-1 Pb S^-1.
  auto unbalance = [&](const Eigen::MatrixXd& pb) -> Eigen::MatrixXd {
    return s.cwiseInverse().asDiagonal() * pb * s.cwiseInverse().asDiagonal();
  };

  // Fast path: the regularized KYP Riccati equation produces a near-boundary
  // P directly. Walk eps down until the exact verification accepts the
  // candidate; thin feasible sets that stall the projection iteration below
  // are handled here.
  for (double eps : {1e-6, 1e-8, 1e-9, 1e-10}) {
    if (auto pr = riccati_kyp(ab, bb, cb, rho, eps)) {
      if (auto cert = verify_certificate(a, b, c, rho, unbalance(*pr))) return cert;
    }
  }

  // Half-vectorization of symmetric n x n matrices.
  std::vector<std::pair<int, int>> idx;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) idx.emplace_back(i, j);
  const int nv = static_cast<int>(idx.size());
  auto vec2p = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < nv; ++k) p(idx[k].first, idx[k].second) = p(idx[k].second, idx[k].first) = v(k);
    return p;
  };
  auto p2vec = [&](const Eigen::MatrixXd& p) {
    Eigen::VectorXd v(nv);
    for (int k = 0; k < nv; ++k) v(k) = p(idx[k].first, idx[k].second);
    return v;
  };
  Eigen::VectorXd wts(nv);
  for (int k = 0; k < nv; ++k) wts(k) = idx[k].first == idx[k].second ? 1.0 : std::sqrt(2.0);
  auto svec = [&](const Eigen::MatrixXd& msym) {
    Eigen::VectorXd v(nv);
    for (int k = 0; k < nv; ++k) v(k) = msym(idx[k].first, idx[k].second) * wts(k);
    return v;
  };

  // The feasible set demands P B = C^T exactly (the (2,2) block is zero), so
  // the search lives on that affine subspace: P = vec2p(v0 + N theta).
  Eigen::MatrixXd emat(n * m, nv);
  for (int k = 0; k < nv; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nv);
    e(k) = 1.0;
    const Eigen::MatrixXd pb = vec2p(e) * bb;
    emat.col(k) = Eigen::Map<const Eigen::VectorXd>(pb.data(), n * m);
  }
  const Eigen::MatrixXd ct = cb.transpose();
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(ct.data(), n * m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(emat, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Eigen::VectorXd v0 = svd.solve(rhs);
  if ((emat * v0 - rhs).norm() > 1e-7 * std::max(1.0, rhs.norm()))
    return std::nullopt;  // no symmetric P satisfies P B = C^T
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++rank;
  const Eigen::MatrixXd null = svd.matrixV().rightCols(nv - rank);
  const auto kdim = null.cols();

  const Eigen::MatrixXd two_rho_ctc = 2.0 * rho * (cb.transpose() * cb);
  const Eigen::MatrixXd p0 = vec2p(v0);
  if (kdim == 0) return verify_certificate(a, b, c, rho, unbalance(p0));
  const Eigen::MatrixXd g0 = ab.transpose() * p0 + p0 * ab + two_rho_ctc;

  Eigen::MatrixXd lmat(nv, kdim);
  for (Eigen::Index t = 0; t < kdim; ++t) {
    const Eigen::MatrixXd p = vec2p(null.col(t));
    lmat.col(t) = svec(ab.transpose() * p + p * ab);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> lpinv(lmat);

  // Lyapunov warm start projected onto the subspace.
  Eigen::MatrixXd q0 = cb.transpose() * cb;
  q0 += Eigen::MatrixXd::Identity(n, n) * std::max(q0.trace() / n, 1e-6);
  const Eigen::MatrixXd pw = solve_lyapunov(ab, q0);
  Eigen::VectorXd theta = null.transpose() * (p2vec(pw) - v0);

  const double relax = 1.9;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd p = vec2p(v0 + null * theta);
    const Eigen::MatrixXd g = ab.transpose() * p + p * ab + two_rho_ctc;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::MatrixXd x =
        es.eigenvectors() * es.eigenvalues().cwiseMin(0.0).asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd xr = g + relax * (x - g);  // over-relaxed step toward the NSD cone
    theta = lpinv.solve(svec(xr - g0));
    p = vec2p(v0 + null * theta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(p);
    const double eps = 1e-9 * std::max(p.trace(), 1e-12) / n;
    if (ep.eigenvalues()(0) < eps) {
      const Eigen::MatrixXd pf =
          ep.eigenvectors() * ep.eigenvalues().cwiseMax(eps).asDiagonal() * ep.eigenvectors().transpose();
      theta = null.transpose() * (p2vec(pf) - v0);
    }
    if (it % 200 == 199) {
      if (auto cert = verify_certificate(a, b, c, rho, unbalance(vec2p(v0 + null * theta))))
        return cert;
    }
  }
  return verify_certificate(a, b, c, rho, unbalance(vec2p(v0 + null * theta)));
}

std::optional<PassivityCertificate> lmi_feasibility(const ClosedLoopBus& clb, double rho,
                                                    int max_iters) {
  return lmi_feasibility(clb.a_c, clb.b_c, clb.c_c, rho, max_iters);
}

double max_osp_index(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                     double tol, const FreqGrid& grid, bool coarse) {
  auto test = [&](double rho) { return osp_freq_test(a, b, c, rho, grid, coarse); };
  if (!test(0.0)) throw std::runtime_error("max_osp_index: not passive");
  double lo = 0.0, hi = 1.0;
  while (hi < 64.0 && test(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  if (hi >= 64.0 && lo * 2.0 >= 64.0) return lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (test(mid) ? lo : hi) = mid;
  }
  return lo;
}

double max_osp_index(const ClosedLoopBus& clb, double tol, const FreqGrid& grid, bool coarse) {
  return max_osp_index(clb.a_c, clb.b_c, clb.c_c, tol, grid, coarse);
}

CertificationReport certify_bus(const ClosedLoopBus& clb, const ControllerGains& gains,
                                const TuningSpec& spec, const FreqGrid& grid, int lmi_iters) {
  CertificationReport rep;
  std::tie(rep.hurwitz_ok, rep.hurwitz_margin) = check_hurwitz(clb.a_c, spec.lambda_max);
  std::tie(rep.gains_ok, rep.max_abs_gain) = check_gain_bounds(gains, spec.p_max);
  if (max_real_eigenvalue(clb.a_c) >= 0.0) return rep;  // frequency checks undefined

  const FreqBoundResult fb = check_freq_bound(clb, spec.gamma, spec.omega_c, grid);
  rep.freq_ok = fb.ok;
  rep.worst_omega = fb.worst_omega;
  rep.worst_gap = fb.worst_gap;

  const bool freq_path = osp_freq_test(clb, spec.rho_min, grid);
  auto cert = lmi_feasibility(clb, spec.rho_min, lmi_iters);
  rep.paths_consistent = (freq_path == cert.has_value());
  rep.osp_ok = freq_path && cert.has_value();
  rep.certificate = std::move(cert);
  if (osp_freq_test(clb, 0.0, grid)) rep.certified_rho = max_osp_index(clb, 1e-4, grid);
  return rep;
}

}  // namespace gridforge
