#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridforge/certify.hpp"
#include "gridforge/inverter.hpp"
#include "gridforge/network.hpp"
#include "gridforge/synthesize.hpp"

namespace gridforge {

struct LoadBlock {
  double p = 0.0;  // watts at nominal voltage
  double q = 0.0;  // vars at nominal voltage
};

/// Constant-impedance load: shunt conductance from rated P, parallel inductor
/// from rated Q (with a series damping resistance set by q_factor), behind a
/// small shunt capacitor so the bus stays an RLC subsystem.
struct LoadBusParams {
  LoadBlock static_load;
  LoadBlock switched_load;
  bool switched_initially_on = false;
  double v_nom = 380.9;    // DQ magnitude the ratings refer to
  double c_shunt = 1e-5;   // farads
  double q_factor = 10.0;  // inductor quality factor omega_s*l/r_series
};

struct ScenarioBus {
  enum class Kind { Inverter, Load, Passive };
  int id = 0;  // 1-based, must match network bus ids
  Kind kind = Kind::Passive;
  Eigen::Vector2d v_ref = Eigen::Vector2d::Zero();  // inverter setpoint
  LoadBusParams load;                               // load buses
  double c_shunt = 1e-5;                            // passive buses
};

struct Event {
  enum class Type { LoadOn, LoadOff, Broadcast, PlugIn };
  Type type = Type::LoadOn;
  double t = 0.0;
  int bus = 0;  // target bus; for PlugIn, the existing bus the connector joins
  Eigen::Vector2d v_ref = Eigen::Vector2d::Zero();    // Broadcast / PlugIn
  LineSection connector{0.01, 1e-4, 0.0, 0.0};        // PlugIn connector line
};

struct SimParams {
  double t_end = 5.0;
  double dt = 1e-5;
  int record_stride = 100;
};

struct Scenario {
  std::string name;
  SyncFrame frame{100.0 * 3.14159265358979323846};
  InverterParams inverter{0.1, 8e-3, 1.0 / 350.0, 50e-6};
  VirtualImpedance zv{0.5, 1.0};
  TuningSpec tuning;
  std::optional<ControllerGains> gains;
  int bus_count = 0;
  std::vector<Line> lines;
  std::vector<ScenarioBus> buses;
  std::vector<Event> events;
  SimParams sim;
  SynthesisConfig synthesis;
};

/// Thrown on schema violations, with the offending field in the message.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario parse_scenario_text(const std::string& json_text);
Scenario parse_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& sc);

/// Semantic checks beyond the schema (event ordering, bus references,
/// network invariants). Empty means clean.
std::vector<std::string> validate_scenario(const Scenario& sc);

}  // namespace gridforge
