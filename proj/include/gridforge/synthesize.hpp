#pragma once

#include <cstdint>
#include <vector>

#include "gridforge/certify.hpp"
#include "gridforge/inverter.hpp"

namespace gridforge {

/// Deterministic normal deviates (Box-Muller over an xorshift64* stream) so
/// synthesis results are reproducible across platforms and standard libraries.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  double uniform();  // in (0, 1)
  double normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct PenaltyWeights {
  double hurwitz = 10.0;  // per unit of eigenvalue-margin violation
  double gain = 0.01;     // per unit of gain excess over p_max
  double freq = 1.0;      // per unit of frequency-bound gap
};

struct SynthesisConfig {
  TuningSpec spec;
  int starts = 8;
  int budget_per_start = 2000;  // objective evaluations per start
  std::uint64_t seed = 1;
  double step_init = 30.0;  // initial pattern-search radius, gain units
  double step_min = 1e-3;
  PenaltyWeights weights;
};

struct SynthesisResult {
  ControllerGains gains;
  CertificationReport report;
  std::vector<double> objective_history;  // best-so-far per evaluation, winning start
  int start_index = 0;
  bool feasible = false;
};

/// Certified rho (coarse grid, tol 1e-3) minus hinge penalties for violated
/// constraints; large finite negative for non-stabilizing candidates.
double evaluate_candidate(const ControllerGains& gains, const AugmentedPlant& plant,
                          const TuningSpec& spec, const PenaltyWeights& weights = {});

/// Multi-start pattern search over the 16 gains. Start 0 seeds from a
/// Lyapunov-based stabilizing feedback; the others perturb it randomly. Each
/// start first searches the 8-parameter rotation-symmetric gain subspace
/// (every 2x2 block a*I + b*J, which the plant's structure favors), then
/// refines over all 16 entries. Deterministic for a fixed seed.
SynthesisResult synthesize_controller(const AugmentedPlant& plant, const SynthesisConfig& cfg);

}  // namespace gridforge
