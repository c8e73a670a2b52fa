#include "gridforge/inverter.hpp"

#include <stdexcept>

namespace gridforge {

PlantSS assemble_plant(const InverterParams& p, const SyncFrame& frame) {
  if (!(p.r_f >= 0.0) || !(p.l_f > 0.0) || !(p.g_f >= 0.0) || !(p.c_f > 0.0))
    throw std::invalid_argument("assemble_plant: invalid filter parameters");

  const double ws = frame.omega_s;
  const double linv = 1.0 / p.l_f;
  const double cinv = 1.0 / p.c_f;

  PlantSS plant;
  plant.a << -p.r_f * linv, ws, -linv, 0.0,
             -ws, -p.r_f * linv, 0.0, -linv,
             cinv, 0.0, -p.g_f * cinv, ws,
             0.0, cinv, -ws, -p.g_f * cinv;
  plant.b_u << linv, 0.0,
               0.0, linv,
               0.0, 0.0,
               0.0, 0.0;
  plant.b_w << 0.0, 0.0,
               0.0, 0.0,
               cinv, 0.0,
               0.0, cinv;
  plant.c << 0.0, 0.0, 1.0, 0.0,
             0.0, 0.0, 0.0, 1.0;
  return plant;
}

AugmentedPlant augment(const PlantSS& plant, const VirtualImpedance& zv) {
  if (!(zv.r_v > 0.0) || zv.x_v < 0.0)
    throw std::invalid_argument("augment: virtual impedance needs r_v > 0, x_v >= 0");

  AugmentedPlant aug;
  aug.z = zv.matrix();
  aug.a.setZero();
  aug.a.topLeftCorner<4, 4>() = plant.a;
  // zeta' = v - v_ref + Z i, with w = -i the measured network current, so the
  // zeta rows pick up C from the plant output and -Z on the w channel.
  aug.a.block<2, 4>(4, 0) = plant.c;
  aug.b_u.setZero();
  aug.b_u.topRows<4>() = plant.b_u;
  aug.b_w.setZero();
  aug.b_w.topRows<4>() = plant.b_w;
  aug.b_w.bottomRows<2>() = -aug.z;
  aug.b_ref.setZero();
  aug.b_ref.bottomRows<2>() = -Eigen::Matrix2d::Identity();
  aug.c.setZero();
  aug.c.leftCols<4>() = plant.c;
  return aug;
}

ClosedLoopBus close_loop(const AugmentedPlant& plant, const ControllerGains& gains) {
  ClosedLoopBus loop;
  loop.a_c = plant.a - plant.b_u * gains.k;
  loop.b_c = plant.b_w - plant.b_u * gains.m;
  loop.c_c = plant.c;
  loop.d_c.setZero();
  loop.b_ref = plant.b_ref;
  return loop;
}

}  // namespace gridforge
