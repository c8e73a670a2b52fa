#include "gridforge/synthesize.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "gridforge/linalg.hpp"

namespace gridforge {

double GaussianRng::uniform() {
  // xorshift64*
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  const std::uint64_t z = state_ * 0x2545f4914f6cdd1dull;
  return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double GaussianRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform(), u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

namespace {

// Coarser sweeps inside the search loop; the winner is re-certified in full.
const FreqGrid kSearchGrid{200, 1e-1, 1e7, 0, 0};

ControllerGains unpack(const Eigen::VectorXd& x) {
  ControllerGains g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 6; ++j) g.k(i, j) = x(6 * i + j);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g.m(i, j) = x(12 + 2 * i + j);
  return g;
}

Eigen::VectorXd sym2full(const Eigen::VectorXd& p) {
  // p = [k1, k1', k2, k2', k3, k3', m, m']; each 2x2 block is a*I + b*J.
  const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d& j = rotation_j();
  Eigen::VectorXd x(16);
  for (int blk = 0; blk < 3; ++blk) {
    const Eigen::Matrix2d kb = p(2 * blk) * i2 + p(2 * blk + 1) * j;
    for (int i = 0; i < 2; ++i)
      for (int c = 0; c < 2; ++c) x(6 * i + 2 * blk + c) = kb(i, c);
  }
  const Eigen::Matrix2d mb = p(6) * i2 + p(7) * j;
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c) x(12 + 2 * i + c) = mb(i, c);
  return x;
}

Eigen::VectorXd project_sym(const Eigen::Matrix<double, 2, 6>& k) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(8);
  for (int blk = 0; blk < 3; ++blk) {
    p(2 * blk) = 0.5 * (k(0, 2 * blk) + k(1, 2 * blk + 1));
    p(2 * blk + 1) = 0.5 * (k(0, 2 * blk + 1) - k(1, 2 * blk));
  }
  return p;
}

struct SearchOut {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
};

template <typename Fn>
SearchOut pattern_search(const Fn& fun, const Eigen::VectorXd& x0, const Eigen::VectorXd& scales,
                         int budget, double step0, double step_min_frac,
                         std::vector<double>* history) {
  SearchOut out{x0, fun(x0), 1};
  if (history) history->push_back(out.f);
  double step = step0;
  const auto n = x0.size();
  while (out.evals < budget && step > step_min_frac) {
    bool improved = false;
    for (Eigen::Index i = 0; i < n && out.evals < budget; ++i) {
      for (const double sgn : {1.0, -1.0}) {
        if (out.evals >= budget) break;
        Eigen::VectorXd xt = out.x;
        xt(i) += sgn * step * scales(i);
        const double ft = fun(xt);
        ++out.evals;
        if (history) history->push_back(std::max(history->back(), ft));
        if (ft > out.f) {
          out.x = xt;
          out.f = ft;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return out;
}

Eigen::VectorXd stabilizing_seed(const AugmentedPlant& plant) {
  // Bass-style feedback: solve (A + beta I) X + X (A + beta I)^T = 2 B B^T
  // and take K = B^T X^-1, which places the closed-loop spectrum left of
  // -beta's mirror. Retry with larger beta if conditioning spoils it.
  for (const double beta : {20.0, 50.0, 200.0}) {
    const Eigen::MatrixXd shifted = plant.a + beta * Eigen::MatrixXd::Identity(6, 6);
    const Eigen::MatrixXd x =
        solve_lyapunov(shifted.transpose(), -2.0 * plant.b_u * plant.b_u.transpose());
    const Eigen::Matrix<double, 2, 6> k = plant.b_u.transpose() * x.inverse();
    if (max_real_eigenvalue(plant.a - plant.b_u * k) < 0.0) return project_sym(k);
  }
  throw std::runtime_error("synthesize_controller: no stabilizing seed found");
}

}  // namespace

double evaluate_candidate(const ControllerGains& gains, const AugmentedPlant& plant,
                          const TuningSpec& spec, const PenaltyWeights& weights) {
  const ClosedLoopBus clb = close_loop(plant, gains);
  const double mre = max_real_eigenvalue(clb.a_c);
  double pen = 0.0;
  const double hmargin = spec.lambda_max - mre;
  if (hmargin < 0.0) pen += weights.hurwitz * (-hmargin);
  const double mx = std::max(gains.k.cwiseAbs().maxCoeff(), gains.m.cwiseAbs().maxCoeff());
  if (mx > spec.p_max) pen += weights.gain * (mx - spec.p_max);

  double rho = -1.0;
  if (mre < 0.0) {
    const FreqBoundResult fb = check_freq_bound(clb, spec.gamma, spec.omega_c, kSearchGrid);
    if (fb.worst_gap > 0.0) pen += weights.freq * fb.worst_gap;
    if (mre < -1e-9 && osp_freq_test(clb, 0.0, kSearchGrid, /*coarse=*/true))
      rho = max_osp_index(clb, 1e-3, kSearchGrid, /*coarse=*/true);
  }
  return (rho >= 0.0 ? rho : -1.0) - pen;
}

SynthesisResult synthesize_controller(const AugmentedPlant& plant, const SynthesisConfig& cfg) {
  if (cfg.starts < 1 || cfg.budget_per_start < 100 || !(cfg.step_min < cfg.step_init))
    throw std::invalid_argument("synthesize_controller: invalid SynthesisConfig");

  auto obj16 = [&](const Eigen::VectorXd& x) {
    return evaluate_candidate(unpack(x), plant, cfg.spec, cfg.weights);
  };
  auto obj8 = [&](const Eigen::VectorXd& p) { return obj16(sym2full(p)); };

  const Eigen::VectorXd p0 = stabilizing_seed(plant);
  const Eigen::VectorXd scales8 = Eigen::VectorXd::Constant(8, cfg.step_init);
  const Eigen::VectorXd scales16 = Eigen::VectorXd::Constant(16, cfg.step_init);
  const double step_min_frac = cfg.step_min / cfg.step_init;

  std::optional<SynthesisResult> best_feasible;
  std::optional<SynthesisResult> best_any;
  double best_any_obj = -std::numeric_limits<double>::infinity();
  bool any_stabilizing = false;

  for (int start = 0; start < cfg.starts; ++start) {
    Eigen::VectorXd ps = p0;
    if (start > 0) {
      GaussianRng rng(cfg.seed * 1000003ull + static_cast<std::uint64_t>(start));
      for (int i = 0; i < 8; ++i) ps(i) += 40.0 * rng.normal();
    }
    std::vector<double> history;
    const int budget_sym = (6 * cfg.budget_per_start) / 10;
    const SearchOut sym = pattern_search(obj8, ps, scales8, budget_sym, 1.0, step_min_frac, &history);
    const SearchOut full = pattern_search(obj16, sym2full(sym.x), scales16,
                                          cfg.budget_per_start - sym.evals, 0.1, step_min_frac,
                                          &history);

    const ControllerGains gains = unpack(full.x);
    if (max_real_eigenvalue(close_loop(plant, gains).a_c) < 0.0) any_stabilizing = true;

    SynthesisResult res;
    res.gains = gains;
    res.report = certify_bus(close_loop(plant, gains), gains, cfg.spec);
    res.objective_history = history;
    res.start_index = start;
    res.feasible = res.report.all_ok();
    if (res.feasible &&
        (!best_feasible || res.report.certified_rho > best_feasible->report.certified_rho))
      best_feasible = res;
    if (full.f > best_any_obj) {
      best_any_obj = full.f;
      best_any = res;
    }
  }
  if (!any_stabilizing) throw std::runtime_error("synthesize_controller: no stabilizing candidate found");
  return best_feasible ? *best_feasible : *best_any;
}

}  // namespace gridforge
