#pragma once

#include <Eigen/Dense>

#include "gridforge/dq.hpp"

namespace gridforge {

/// LC filter of a grid-forming inverter.
struct InverterParams {
  double r_f;  // ohms
  double l_f;  // henries
  double g_f;  // siemens (shunt across the filter capacitor)
  double c_f;  // farads
};

/// Virtual impedance Z = R_V I + X_V J shaping the steady-state droop law
/// v = v_ref - Z i.
struct VirtualImpedance {
  double r_v;  // ohms, > 0
  double x_v;  // ohms, >= 0

  Eigen::Matrix2d matrix() const { return r_v * Eigen::Matrix2d::Identity() + x_v * rotation_j(); }
};

/// Four-state filter plant: x = [i_iDQ; v_DQ], u the inverter bridge
/// voltage, w = -i_DQ the current drawn by the network, z = v_DQ.
struct PlantSS {
  Eigen::Matrix4d a;
  Eigen::Matrix<double, 4, 2> b_u;
  Eigen::Matrix<double, 4, 2> b_w;
  Eigen::Matrix<double, 2, 4> c;
};

/// Six-state plant with the setpoint integrator appended:
/// x~ = [i_iDQ; v_DQ; zeta_DQ], zeta' = v - v_ref + Z i.
struct AugmentedPlant {
  Eigen::Matrix<double, 6, 6> a;
  Eigen::Matrix<double, 6, 2> b_u;
  Eigen::Matrix<double, 6, 2> b_w;
  Eigen::Matrix<double, 6, 2> b_ref;  // injection of v_ref into the zeta rows
  Eigen::Matrix<double, 2, 6> c;
  Eigen::Matrix2d z;  // the virtual impedance actually baked into b_w
};

/// State feedback u = -K x~ - M w.
struct ControllerGains {
  Eigen::Matrix<double, 2, 6> k;
  Eigen::Matrix2d m;
};

/// Closed loop of one inverter bus, input w, output z.
struct ClosedLoopBus {
  Eigen::Matrix<double, 6, 6> a_c;
  Eigen::Matrix<double, 6, 2> b_c;
  Eigen::Matrix<double, 2, 6> c_c;
  Eigen::Matrix2d d_c;                // zero for the strictly proper loop
  Eigen::Matrix<double, 6, 2> b_ref;  // carried through for simulation
};

PlantSS assemble_plant(const InverterParams& p, const SyncFrame& frame);

AugmentedPlant augment(const PlantSS& plant, const VirtualImpedance& zv);

ClosedLoopBus close_loop(const AugmentedPlant& plant, const ControllerGains& gains);

}  // namespace gridforge
