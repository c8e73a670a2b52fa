#pragma once

#include <stdexcept>
#include <vector>

#include "gridforge/scenario.hpp"

namespace gridforge {

/// Raised when a simulated state leaves the admissible region (|x| > 1e9).
struct DivergenceError : std::runtime_error {
  double t;
  int bus;  // 1-based bus id, 0 if the offending state belongs to the lines
  DivergenceError(double t_, int bus_, const std::string& msg)
      : std::runtime_error(msg), t(t_), bus(bus_) {}
};

/// Switching/plug state that selects one LTI interval of a scenario.
struct RuntimeState {
  std::vector<bool> switched_on;       // per scenario bus (meaningful for loads)
  std::vector<Eigen::Vector2d> v_ref;  // per scenario bus (meaningful for inverters)
  struct Plugged {
    int attach_bus = 0;
    LineSection connector;
    Eigen::Vector2d v_ref;
  };
  std::vector<Plugged> plugged;
};

RuntimeState initial_runtime_state(const Scenario& sc);

/// One LTI interval of the interconnected microgrid: x' = a x + f. State
/// layout: line states first, then one block per bus (6 for inverter and load
/// buses, 2 for passive buses); plugged inverters appended after the scenario
/// buses, each reached through its own connector line.
struct CompositeSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd f;
  Eigen::MatrixXd i_line;  // (2*nb x n) map from state to bus injection currents
  NetworkModel net;        // includes any plugged connector lines
  double omega_s = 0.0;
  int line_states = 0;
  std::vector<ScenarioBus> buses;  // scenario buses plus synthesized plugged entries
  std::vector<int> bus_offset;
  std::vector<int> bus_size;
  std::vector<bool> switched_on;

  Eigen::Index n() const { return a.rows(); }
  int bus_count() const { return static_cast<int>(buses.size()); }
};

CompositeSystem build_closed_system(const Scenario& sc, const RuntimeState& rs);

/// Steady state of one interval, a x = -f by direct solve.
Eigen::VectorXd equilibrium(const CompositeSystem& sys);

/// One fixed-step RK4 step.
Eigen::VectorXd step(const CompositeSystem& sys, const Eigen::VectorXd& x, double dt);

struct BusSample {
  double vd = 0, vq = 0, id = 0, iq = 0, p = 0, q = 0;
};

struct TimeSeries {
  std::vector<double> t;
  std::vector<std::vector<BusSample>> samples;  // samples[i][bus]
  std::vector<Eigen::VectorXd> states;          // composite state snapshots
  std::vector<int> interval_index;
};

struct Interval {
  double t_begin = 0.0;
  CompositeSystem system;
  Eigen::VectorXd x_eq;
};

struct RunResult {
  TimeSeries series;
  std::vector<Interval> intervals;
  Eigen::VectorXd final_state;
};

RunResult run_scenario(const Scenario& sc);

/// Per-bus P(t), Q(t) recomputed from the recorded voltages and currents.
std::vector<std::vector<Power>> power_trace(const TimeSeries& ts);

struct LyapunovTrace {
  std::vector<double> t;
  std::vector<double> v;
  bool monotone = false;
  double worst_violation = 0.0;  // largest increase between consecutive samples
};

/// Composite storage V(t) = line energy + sum of bus storages, in deviation
/// from each interval's equilibrium; inverter buses use 1/2 x^T P x with the
/// certified storage matrix, load/passive buses their physical RLC energy.
LyapunovTrace lyapunov_trace(const RunResult& run, const Eigen::MatrixXd& p_inverter);

}  // namespace gridforge
