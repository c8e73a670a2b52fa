#pragma once

#include <cmath>

#include "gridforge/certify.hpp"
#include "gridforge/inverter.hpp"
#include "gridforge/network.hpp"

namespace gftest {

inline gridforge::SyncFrame frame() { return gridforge::SyncFrame(100.0 * M_PI); }

inline gridforge::InverterParams filter_params() { return {0.1, 8e-3, 1.0 / 350.0, 50e-6}; }

inline gridforge::VirtualImpedance virtual_impedance() { return {0.5, 1.0}; }

/// The published reference controller for the filter above.
inline gridforge::ControllerGains reference_gains() {
  gridforge::ControllerGains g;
  g.k << 124.0, 1.54, 10.2, -0.94, 57.2, -16.8,  //
      -1.09, 124.0, 1.20, 9.68, 16.7, 57.4;
  g.m << 111.0, -0.07, 0.06, 112.0;
  return g;
}

inline gridforge::AugmentedPlant reference_plant() {
  return gridforge::augment(gridforge::assemble_plant(filter_params(), frame()),
                            virtual_impedance());
}

inline gridforge::ClosedLoopBus reference_loop() {
  return gridforge::close_loop(reference_plant(), reference_gains());
}

/// The 4-bus benchmark lines: (1,2) and (3,4) light, (2,3) heavy.
inline std::vector<gridforge::Line> benchmark_lines() {
  return {
      {1, 2, {{0.1, 0.6e-3, 0.0, 0.0}}},
      {2, 3, {{0.1, 5e-3, 0.0, 0.0}}},
      {3, 4, {{0.1, 0.6e-3, 0.0, 0.0}}},
  };
}

}  // namespace gftest
