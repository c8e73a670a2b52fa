#include "gridforge/dq.hpp"

#include <cmath>
#include <stdexcept>

namespace gridforge {

SyncFrame::SyncFrame(double w) : omega_s(w) {
  if (!(w > 0.0)) throw std::invalid_argument("SyncFrame: omega_s must be > 0");
}

const Eigen::Matrix2d& rotation_j() {
  static const Eigen::Matrix2d j = (Eigen::Matrix2d() << 0, 1, -1, 0).finished();
  return j;
}

Eigen::Matrix<double, 2, 3> park_matrix(double theta) {
  const double k = std::sqrt(2.0 / 3.0);
  const double s = 2.0 * M_PI / 3.0;
  Eigen::Matrix<double, 2, 3> t;
  t << std::cos(theta), std::cos(theta - s), std::cos(theta + s),
       std::sin(theta), std::sin(theta - s), std::sin(theta + s);
  return k * t;
}

DQPair park_transform(const Eigen::Vector3d& x_abc, const SyncFrame& frame, double t) {
  return DQPair::from(park_matrix(frame.omega_s * t) * x_abc);
}

Eigen::Vector3d inverse_park(const DQPair& x_dq, const SyncFrame& frame, double t) {
  return park_matrix(frame.omega_s * t).transpose() * x_dq.vec();
}

Power instantaneous_power(const DQPair& v, const DQPair& i) {
  return {v.d * i.d + v.q * i.q, v.q * i.d - v.d * i.q};
}

}  // namespace gridforge
