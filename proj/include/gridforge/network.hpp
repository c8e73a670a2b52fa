#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridforge/dq.hpp"

namespace gridforge {

/// One elementary section of a line: a series RL branch followed by a shunt
/// GC node. The last section of a line has no right-hand capacitor (the bus
/// capacitance belongs to the bus dynamics), so g and c stay zero there.
struct LineSection {
  double r = 0.0;  // ohms, > 0
  double l = 0.0;  // henries, > 0
  double g = 0.0;  // siemens, >= 0 (shunt at the section's right-hand node)
  double c = 0.0;  // farads, > 0 when an internal node follows
};

struct Line {
  int from_bus = 0;  // 1-based bus ids
  int to_bus = 0;
  std::vector<LineSection> sections;
};

/// Graph of the RLC line network with its incidence matrices and diagonal
/// parameter matrices. Node ordering: buses 1..|N| first, then internal
/// capacitor nodes in enumeration order (line order, section order within a
/// line). Edge direction is from_bus -> to_bus.
struct NetworkModel {
  int bus_count = 0;
  std::vector<Line> lines;

  Eigen::MatrixXd h;    // |N_L| x |E_L| incidence, entries in {-1,0,1}
  Eigen::MatrixXd h_b;  // first |N| rows of h
  Eigen::MatrixXd h_c;  // last |N_C| rows of h
  Eigen::VectorXd r;    // per-edge series resistance
  Eigen::VectorXd l;    // per-edge series inductance
  Eigen::VectorXd g;    // per-cap-node shunt conductance
  Eigen::VectorXd c;    // per-cap-node capacitance

  int edge_count() const { return static_cast<int>(r.size()); }
  int cap_count() const { return static_cast<int>(c.size()); }
};

/// State-space of the line network with state [I^N_DQ; V^C_DQ], input the
/// stacked bus voltages V_DQ (2|N|) and output the bus current injections
/// I_DQ (2|N|).
struct LineStateSpace {
  Eigen::MatrixXd a;  // (2|E_L|+2|N_C|) square
  Eigen::MatrixXd b;  // x 2|N|
  Eigen::MatrixXd c;  // 2|N| x states
  int edge_count = 0;
  int cap_count = 0;
};

NetworkModel build_network(int bus_count, const std::vector<Line>& lines);

LineStateSpace assemble_line_statespace(const NetworkModel& net, const SyncFrame& frame);

/// Stored magnetic + electric energy of the line network relative to an
/// equilibrium state, 1/2 dI^T L dI + 1/2 dV^T C dV.
double line_energy(const NetworkModel& net, const Eigen::VectorXd& state,
                   const Eigen::VectorXd& state_eq);

/// Non-throwing structural checks; returns one message per violated invariant.
std::vector<std::string> validate_network(const NetworkModel& net);

}  // namespace gridforge
