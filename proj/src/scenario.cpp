#include "gridforge/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gridforge {

namespace {

using nlohmann::json;

const json& need(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw ScenarioError("missing field '" + std::string(key) + "' in " + ctx);
  return j.at(key);
}

double num(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) throw ScenarioError("field '" + std::string(key) + "' in " + ctx + " must be a number");
  return v.get<double>();
}

double num_or(const json& j, const char* key, double def) {
  return (j.is_object() && j.contains(key)) ? j.at(key).get<double>() : def;
}

Eigen::Vector2d vec2(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2) throw ScenarioError(ctx + " must be an array of 2 numbers");
  return {v.at(0).get<double>(), v.at(1).get<double>()};
}

Eigen::MatrixXd matrix(const json& v, int rows, int cols, const std::string& ctx) {
  if (!v.is_array() || static_cast<int>(v.size()) != rows)
    throw ScenarioError(ctx + " must be a " + std::to_string(rows) + "x" + std::to_string(cols) + " array");
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = v.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ScenarioError(ctx + " row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    for (int j = 0; j < cols; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

LineSection parse_section(const json& s, const std::string& ctx) {
  LineSection sec;
  sec.r = num(s, "r", ctx);
  sec.l = num(s, "l", ctx);
  sec.g = num_or(s, "g", 0.0);
  sec.c = num_or(s, "c", 0.0);
  return sec;
}

json section_json(const LineSection& s) {
  json j{{"r", s.r}, {"l", s.l}};
  if (s.g != 0.0) j["g"] = s.g;
  if (s.c != 0.0) j["c"] = s.c;
  return j;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  json j;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    j = json::object();  // empty file reads as an empty scenario
  } else {
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ScenarioError(std::string("invalid JSON: ") + e.what());
    }
  }
  if (!j.is_object()) throw ScenarioError("missing field 'network' in scenario (top level is not an object)");

  Scenario sc;
  try {
    sc.name = j.value("name", std::string("scenario"));
    if (j.contains("frame")) sc.frame = SyncFrame(num(j.at("frame"), "omega_s", "frame"));
    if (j.contains("inverter")) {
      const json& inv = j.at("inverter");
      sc.inverter = InverterParams{num(inv, "r_f", "inverter"), num(inv, "l_f", "inverter"),
                                   num(inv, "g_f", "inverter"), num(inv, "c_f", "inverter")};
    }
    if (j.contains("virtual_impedance")) {
      const json& z = j.at("virtual_impedance");
      sc.zv = VirtualImpedance{num(z, "r_v", "virtual_impedance"), num(z, "x_v", "virtual_impedance")};
    }
    if (j.contains("tuning")) {
      const json& t = j.at("tuning");
      sc.tuning.p_max = num_or(t, "p_max", sc.tuning.p_max);
      sc.tuning.lambda_max = num_or(t, "lambda_max", sc.tuning.lambda_max);
      sc.tuning.gamma = num_or(t, "gamma", sc.tuning.gamma);
      sc.tuning.omega_c = num_or(t, "omega_c", sc.tuning.omega_c);
      sc.tuning.rho_min = num_or(t, "rho_min", sc.tuning.rho_min);
    }
    if (j.contains("gains")) {
      ControllerGains g;
      g.k = matrix(need(j.at("gains"), "k", "gains"), 2, 6, "gains.k");
      g.m = matrix(need(j.at("gains"), "m", "gains"), 2, 2, "gains.m");
      sc.gains = g;
    }

    const json& net = need(j, "network", "scenario");
    sc.bus_count = static_cast<int>(num(net, "bus_count", "network"));
    for (const json& lj : need(net, "lines", "network")) {
      Line line;
      line.from_bus = static_cast<int>(num(lj, "from", "network.lines[]"));
      line.to_bus = static_cast<int>(num(lj, "to", "network.lines[]"));
      for (const json& s : need(lj, "sections", "network.lines[]"))
        line.sections.push_back(parse_section(s, "network.lines[].sections[]"));
      sc.lines.push_back(std::move(line));
    }

    for (const json& bj : need(j, "buses", "scenario")) {
      ScenarioBus bus;
      bus.id = static_cast<int>(num(bj, "id", "buses[]"));
      const std::string kind = need(bj, "type", "buses[]").get<std::string>();
      if (kind == "inverter") {
        bus.kind = ScenarioBus::Kind::Inverter;
        bus.v_ref = vec2(need(bj, "v_ref", "buses[]"), "buses[].v_ref");
      } else if (kind == "load") {
        bus.kind = ScenarioBus::Kind::Load;
        LoadBusParams& lp = bus.load;
        if (bj.contains("static")) {
          lp.static_load.p = num(bj.at("static"), "p", "buses[].static");
          lp.static_load.q = num(bj.at("static"), "q", "buses[].static");
        }
        if (bj.contains("switched")) {
          lp.switched_load.p = num(bj.at("switched"), "p", "buses[].switched");
          lp.switched_load.q = num(bj.at("switched"), "q", "buses[].switched");
        }
        lp.switched_initially_on = bj.value("switched_initially_on", false);
        lp.v_nom = num_or(bj, "v_nom", lp.v_nom);
        lp.c_shunt = num_or(bj, "c_shunt", lp.c_shunt);
        lp.q_factor = num_or(bj, "q_factor", lp.q_factor);
      } else if (kind == "passive") {
        bus.kind = ScenarioBus::Kind::Passive;
        bus.c_shunt = num_or(bj, "c_shunt", bus.c_shunt);
      } else {
        throw ScenarioError("unknown bus type '" + kind + "' in buses[]");
      }
      sc.buses.push_back(bus);
    }

    if (j.contains("events")) {
      for (const json& ej : j.at("events")) {
        Event ev;
        ev.t = num(ej, "t", "events[]");
        ev.bus = static_cast<int>(num(ej, "bus", "events[]"));
        const std::string type = need(ej, "type", "events[]").get<std::string>();
        if (type == "load_on") ev.type = Event::Type::LoadOn;
        else if (type == "load_off") ev.type = Event::Type::LoadOff;
        else if (type == "broadcast") ev.type = Event::Type::Broadcast;
        else if (type == "plug_in") ev.type = Event::Type::PlugIn;
        else throw ScenarioError("unknown event type '" + type + "' in events[]");
        if (ev.type == Event::Type::Broadcast || ev.type == Event::Type::PlugIn)
          ev.v_ref = vec2(need(ej, "v_ref", "events[]"), "events[].v_ref");
        if (ev.type == Event::Type::PlugIn && ej.contains("connector"))
          ev.connector = parse_section(ej.at("connector"), "events[].connector");
        sc.events.push_back(ev);
      }
    }

    if (j.contains("sim")) {
      const json& s = j.at("sim");
      sc.sim.t_end = num_or(s, "t_end", sc.sim.t_end);
      sc.sim.dt = num_or(s, "dt", sc.sim.dt);
      sc.sim.record_stride = static_cast<int>(num_or(s, "record_stride", sc.sim.record_stride));
    }
    if (j.contains("synthesis")) {
      const json& s = j.at("synthesis");
      sc.synthesis.spec = sc.tuning;
      sc.synthesis.starts = static_cast<int>(num_or(s, "starts", sc.synthesis.starts));
      sc.synthesis.budget_per_start =
          static_cast<int>(num_or(s, "budget_per_start", sc.synthesis.budget_per_start));
      sc.synthesis.seed = static_cast<std::uint64_t>(num_or(s, "seed", 1.0));
      sc.synthesis.step_init = num_or(s, "step_init", sc.synthesis.step_init);
      sc.synthesis.step_min = num_or(s, "step_min", sc.synthesis.step_min);
      if (s.contains("weights")) {
        const json& w = s.at("weights");
        sc.synthesis.weights.hurwitz = num_or(w, "hurwitz", sc.synthesis.weights.hurwitz);
        sc.synthesis.weights.gain = num_or(w, "gain", sc.synthesis.weights.gain);
        sc.synthesis.weights.freq = num_or(w, "freq", sc.synthesis.weights.freq);
      }
    } else {
      sc.synthesis.spec = sc.tuning;
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  return sc;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

std::string serialize_scenario(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["frame"] = {{"omega_s", sc.frame.omega_s}};
  j["inverter"] = {{"r_f", sc.inverter.r_f}, {"l_f", sc.inverter.l_f},
                   {"g_f", sc.inverter.g_f}, {"c_f", sc.inverter.c_f}};
  j["virtual_impedance"] = {{"r_v", sc.zv.r_v}, {"x_v", sc.zv.x_v}};
  j["tuning"] = {{"p_max", sc.tuning.p_max}, {"lambda_max", sc.tuning.lambda_max},
                 {"gamma", sc.tuning.gamma}, {"omega_c", sc.tuning.omega_c},
                 {"rho_min", sc.tuning.rho_min}};
  if (sc.gains) {
    json k = json::array(), m = json::array();
    for (int i = 0; i < 2; ++i) {
      json row = json::array();
      for (int c = 0; c < 6; ++c) row.push_back(sc.gains->k(i, c));
      k.push_back(row);
      json rowm = json::array();
      for (int c = 0; c < 2; ++c) rowm.push_back(sc.gains->m(i, c));
      m.push_back(rowm);
    }
    j["gains"] = {{"k", k}, {"m", m}};
  }
  json lines = json::array();
  for (const Line& line : sc.lines) {
    json sections = json::array();
    for (const LineSection& s : line.sections) sections.push_back(section_json(s));
    lines.push_back({{"from", line.from_bus}, {"to", line.to_bus}, {"sections", sections}});
  }
  j["network"] = {{"bus_count", sc.bus_count}, {"lines", lines}};
  json buses = json::array();
  for (const ScenarioBus& b : sc.buses) {
    json bj{{"id", b.id}};
    switch (b.kind) {
      case ScenarioBus::Kind::Inverter:
        bj["type"] = "inverter";
        bj["v_ref"] = {b.v_ref(0), b.v_ref(1)};
        break;
      case ScenarioBus::Kind::Load:
        bj["type"] = "load";
        bj["static"] = {{"p", b.load.static_load.p}, {"q", b.load.static_load.q}};
        bj["switched"] = {{"p", b.load.switched_load.p}, {"q", b.load.switched_load.q}};
        bj["switched_initially_on"] = b.load.switched_initially_on;
        bj["v_nom"] = b.load.v_nom;
        bj["c_shunt"] = b.load.c_shunt;
        bj["q_factor"] = b.load.q_factor;
        break;
      case ScenarioBus::Kind::Passive:
        bj["type"] = "passive";
        bj["c_shunt"] = b.c_shunt;
        break;
    }
    buses.push_back(bj);
  }
  j["buses"] = buses;
  json events = json::array();
  for (const Event& e : sc.events) {
    json ej{{"t", e.t}, {"bus", e.bus}};
    switch (e.type) {
      case Event::Type::LoadOn: ej["type"] = "load_on"; break;
      case Event::Type::LoadOff: ej["type"] = "load_off"; break;
      case Event::Type::Broadcast:
        ej["type"] = "broadcast";
        ej["v_ref"] = {e.v_ref(0), e.v_ref(1)};
        break;
      case Event::Type::PlugIn:
        ej["type"] = "plug_in";
        ej["v_ref"] = {e.v_ref(0), e.v_ref(1)};
        ej["connector"] = section_json(e.connector);
        break;
    }
    events.push_back(ej);
  }
  j["events"] = events;
  j["sim"] = {{"t_end", sc.sim.t_end}, {"dt", sc.sim.dt}, {"record_stride", sc.sim.record_stride}};
  j["synthesis"] = {{"starts", sc.synthesis.starts},
                    {"budget_per_start", sc.synthesis.budget_per_start},
                    {"seed", sc.synthesis.seed},
                    {"step_init", sc.synthesis.step_init},
                    {"step_min", sc.synthesis.step_min},
                    {"weights",
                     {{"hurwitz", sc.synthesis.weights.hurwitz},
                      {"gain", sc.synthesis.weights.gain},
                      {"freq", sc.synthesis.weights.freq}}}};
  return j.dump(2);
}

std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> issues;
  try {
    const NetworkModel net = build_network(sc.bus_count, sc.lines);
    for (auto& msg : validate_network(net)) issues.push_back("network: " + msg);
  } catch (const std::exception& e) {
    issues.push_back(std::string("network: ") + e.what());
  }
  if (static_cast<int>(sc.buses.size()) != sc.bus_count)
    issues.push_back("bus list size does not match network.bus_count");
  std::vector<bool> seen(sc.bus_count + 1, false);
  for (const ScenarioBus& b : sc.buses) {
    if (b.id < 1 || b.id > sc.bus_count) {
      issues.push_back("bus id " + std::to_string(b.id) + " out of range");
      continue;
    }
    if (seen[b.id]) issues.push_back("duplicate bus id " + std::to_string(b.id));
    seen[b.id] = true;
    if (b.kind == ScenarioBus::Kind::Load) {
      if (b.load.c_shunt <= 0.0 || b.load.v_nom <= 0.0 || b.load.q_factor <= 0.0)
        issues.push_back("bus " + std::to_string(b.id) + ": nonpositive load parameter");
      if (b.load.static_load.p < 0.0 || b.load.switched_load.p < 0.0)
        issues.push_back("bus " + std::to_string(b.id) + ": negative load rating");
    }
    if (b.kind == ScenarioBus::Kind::Passive && b.c_shunt <= 0.0)
      issues.push_back("bus " + std::to_string(b.id) + ": nonpositive shunt capacitance");
  }
  double prev_t = -1.0;
  for (const Event& e : sc.events) {
    if (e.t < 0.0) issues.push_back("event at negative time");
    if (e.t <= prev_t) issues.push_back("events not strictly ordered in time");
    prev_t = e.t;
    if (e.bus < 1 || e.bus > sc.bus_count)
      issues.push_back("event references unknown bus " + std::to_string(e.bus));
    else if (e.type == Event::Type::LoadOn || e.type == Event::Type::LoadOff) {
      auto it = std::find_if(sc.buses.begin(), sc.buses.end(),
                             [&](const ScenarioBus& b) { return b.id == e.bus; });
      if (it != sc.buses.end() && it->kind != ScenarioBus::Kind::Load)
        issues.push_back("load switch event on non-load bus " + std::to_string(e.bus));
    } else if (e.type == Event::Type::Broadcast) {
      auto it = std::find_if(sc.buses.begin(), sc.buses.end(),
                             [&](const ScenarioBus& b) { return b.id == e.bus; });
      if (it != sc.buses.end() && it->kind != ScenarioBus::Kind::Inverter)
        issues.push_back("broadcast event on non-inverter bus " + std::to_string(e.bus));
    }
    if (e.t >= sc.sim.t_end) issues.push_back("event after t_end");
  }
  if (!(sc.sim.dt > 0.0)) issues.push_back("sim.dt must be positive");
  if (sc.sim.record_stride < 1) issues.push_back("sim.record_stride must be >= 1");
  if (!(sc.sim.t_end > 0.0)) issues.push_back("sim.t_end must be positive");
  return issues;
}

}  // namespace gridforge
