#pragma once

#include <Eigen/Dense>

namespace gridforge {

/// A two-axis quantity (voltage or current) in the common synchronous
/// reference frame.
struct DQPair {
  double d = 0.0;
  double q = 0.0;

  Eigen::Vector2d vec() const { return {d, q}; }
  static DQPair from(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
};

/// The shared rotating frame. All devices in a microgrid use the same
/// constant synchronous frequency.
struct SyncFrame {
  double omega_s;  // rad/s, > 0

  explicit SyncFrame(double w);
};

/// The 2x2 rotation generator [[0,1],[-1,0]]. J*J = -I, J^T = -J.
const Eigen::Matrix2d& rotation_j();

/// Power-invariant Park/Clarke transform matrix T(theta), 2x3.
Eigen::Matrix<double, 2, 3> park_matrix(double theta);

/// abc -> DQ at time t.
DQPair park_transform(const Eigen::Vector3d& x_abc, const SyncFrame& frame, double t);

/// DQ -> balanced abc at time t (transpose-based left inverse).
Eigen::Vector3d inverse_park(const DQPair& x_dq, const SyncFrame& frame, double t);

struct Power {
  double p;  // watts
  double q;  // vars, convention q = v_q*i_d - v_d*i_q
};

/// Instantaneous power in the power-invariant frame: p = v . i.
Power instantaneous_power(const DQPair& v, const DQPair& i);

}  // namespace gridforge
