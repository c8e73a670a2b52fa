#include "gridforge/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "gridforge/linalg.hpp"

namespace gridforge {

namespace {

constexpr double kOffBranchDecay = 1e3;  // 1/s, parks disconnected branch states at zero
constexpr double kDivergenceLimit = 1e9;

const ScenarioBus* find_bus(const Scenario& sc, int id) {
  for (const ScenarioBus& b : sc.buses)
    if (b.id == id) return &b;
  return nullptr;
}

int bus_state_size(ScenarioBus::Kind kind) {
  return kind == ScenarioBus::Kind::Passive ? 2 : 6;
}

ClosedLoopBus scenario_loop(const Scenario& sc) {
  if (!sc.gains)
    throw std::invalid_argument("build_closed_system: scenario has inverter buses but no gains");
  return close_loop(augment(assemble_plant(sc.inverter, sc.frame), sc.zv), *sc.gains);
}

}  // namespace

RuntimeState initial_runtime_state(const Scenario& sc) {
  RuntimeState rs;
  rs.switched_on.resize(sc.buses.size(), false);
  rs.v_ref.resize(sc.buses.size(), Eigen::Vector2d::Zero());
  for (std::size_t i = 0; i < sc.buses.size(); ++i) {
    if (sc.buses[i].kind == ScenarioBus::Kind::Load)
      rs.switched_on[i] = sc.buses[i].load.switched_initially_on;
    if (sc.buses[i].kind == ScenarioBus::Kind::Inverter) rs.v_ref[i] = sc.buses[i].v_ref;
  }
  return rs;
}

CompositeSystem build_closed_system(const Scenario& sc, const RuntimeState& rs) {
  if (static_cast<int>(sc.buses.size()) != sc.bus_count)
    throw std::invalid_argument("build_closed_system: bus list does not match network bus count");

  CompositeSystem sys;
  sys.buses = sc.buses;
  std::sort(sys.buses.begin(), sys.buses.end(),
            [](const ScenarioBus& a, const ScenarioBus& b) { return a.id < b.id; });
  sys.switched_on.resize(sys.buses.size());
  std::vector<Eigen::Vector2d> vref(sys.buses.size(), Eigen::Vector2d::Zero());
  for (std::size_t i = 0; i < sys.buses.size(); ++i) {
    // runtime state is indexed like sc.buses
    const auto src = std::find_if(sc.buses.begin(), sc.buses.end(), [&](const ScenarioBus& b) {
      return b.id == sys.buses[i].id;
    });
    const auto k = static_cast<std::size_t>(src - sc.buses.begin());
    sys.switched_on[i] = rs.switched_on[k];
    vref[i] = rs.v_ref[k];
  }

  std::vector<Line> lines = sc.lines;
  for (std::size_t k = 0; k < rs.plugged.size(); ++k) {
    const auto& pg = rs.plugged[k];
    ScenarioBus nb;
    nb.id = sc.bus_count + static_cast<int>(k) + 1;
    nb.kind = ScenarioBus::Kind::Inverter;
    nb.v_ref = pg.v_ref;
    sys.buses.push_back(nb);
    sys.switched_on.push_back(false);
    vref.push_back(pg.v_ref);
    lines.push_back(Line{pg.attach_bus, nb.id, {pg.connector}});
  }
  const int nb = static_cast<int>(sys.buses.size());

  sys.omega_s = sc.frame.omega_s;
  sys.net = build_network(nb, lines);
  const LineStateSpace lss = assemble_line_statespace(sys.net, sc.frame);
  sys.line_states = static_cast<int>(lss.a.rows());

  int n = sys.line_states;
  for (const ScenarioBus& b : sys.buses) {
    sys.bus_offset.push_back(n);
    sys.bus_size.push_back(bus_state_size(b.kind));
    n += sys.bus_size.back();
  }

  sys.a = Eigen::MatrixXd::Zero(n, n);
  sys.f = Eigen::VectorXd::Zero(n);
  sys.a.topLeftCorner(sys.line_states, sys.line_states) = lss.a;

  // Bus terminal voltages feed the line network...
  Eigen::MatrixXd vsel = Eigen::MatrixXd::Zero(2 * nb, n);
  for (int b = 0; b < nb; ++b) {
    const int o = sys.bus_offset[b];
    const int vrow = sys.buses[b].kind == ScenarioBus::Kind::Inverter ? o + 2 : o;
    vsel.block<2, 2>(2 * b, vrow).setIdentity();
  }
  sys.a.topRows(sys.line_states) += lss.b * vsel;

  // ...and the line injections feed the buses with a sign flip (current is
  // leaving each bus into the network).
  sys.i_line = Eigen::MatrixXd::Zero(2 * nb, n);
  sys.i_line.leftCols(sys.line_states) = lss.c;

  const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d& j = rotation_j();
  const double ws = sc.frame.omega_s;
  const bool need_loop = std::any_of(sys.buses.begin(), sys.buses.end(), [](const ScenarioBus& b) {
    return b.kind == ScenarioBus::Kind::Inverter;
  });
  ClosedLoopBus clb;
  if (need_loop) clb = scenario_loop(sc);

  for (int b = 0; b < nb; ++b) {
    const int o = sys.bus_offset[b];
    const auto w_in = -sys.i_line.middleRows(2 * b, 2);  // bus input w = -i_DQ
    switch (sys.buses[b].kind) {
      case ScenarioBus::Kind::Inverter: {
        sys.a.block<6, 6>(o, o) += clb.a_c;
        sys.a.middleRows<6>(o) += clb.b_c * w_in;
        sys.f.segment<6>(o) += clb.b_ref * vref[b];
        break;
      }
      case ScenarioBus::Kind::Load: {
        const LoadBusParams& lp = sys.buses[b].load;
        const bool on = sys.switched_on[b];
        const double csh = lp.c_shunt;
        const double g1 = lp.static_load.p / (lp.v_nom * lp.v_nom);
        const double g2 = lp.switched_load.p / (lp.v_nom * lp.v_nom);
        const double gtot = g1 + (on ? g2 : 0.0);
        sys.a.block<2, 2>(o, o) += ws * j - (gtot / csh) * i2;
        sys.a.middleRows<2>(o) += w_in / csh;  // current leaving into the network discharges the shunt
        auto branch = [&](int row0, const LoadBlock& blk, bool connected) {
          if (connected && blk.q > 0.0) {
            const double l = lp.v_nom * lp.v_nom / (ws * blk.q);
            const double r = ws * l / lp.q_factor;  // series damping
            sys.a.block<2, 2>(o + row0, o + row0) += ws * j - (r / l) * i2;
            sys.a.block<2, 2>(o + row0, o) += i2 / l;
            sys.a.block<2, 2>(o, o + row0) += -i2 / csh;
          } else {
            sys.a.block<2, 2>(o + row0, o + row0) -= kOffBranchDecay * i2;
          }
        };
        branch(2, lp.static_load, true);
        branch(4, lp.switched_load, on);
        break;
      }
      case ScenarioBus::Kind::Passive: {
        sys.a.block<2, 2>(o, o) += ws * j;
        sys.a.middleRows<2>(o) += w_in / sys.buses[b].c_shunt;
        break;
      }
    }
  }
  return sys;
}

Eigen::VectorXd equilibrium(const CompositeSystem& sys) {
  const Eigen::VectorXd x = sys.a.fullPivLu().solve(-sys.f);
  if ((sys.a * x + sys.f).norm() > 1e-6 * std::max(1.0, sys.f.norm()))
    throw std::runtime_error("equilibrium: composite system has no unique steady state");
  return x;
}

Eigen::VectorXd step(const CompositeSystem& sys, const Eigen::VectorXd& x, double dt) {
  const Eigen::VectorXd k1 = sys.a * x + sys.f;
  const Eigen::VectorXd k2 = sys.a * (x + 0.5 * dt * k1) + sys.f;
  const Eigen::VectorXd k3 = sys.a * (x + 0.5 * dt * k2) + sys.f;
  const Eigen::VectorXd k4 = sys.a * (x + dt * k3) + sys.f;
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

void check_divergence(const CompositeSystem& sys, const Eigen::VectorXd& x, double t) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isfinite(x(i)) && std::abs(x(i)) <= kDivergenceLimit) continue;
    int bus = 0;
    for (int b = 0; b < sys.bus_count(); ++b)
      if (i >= sys.bus_offset[b] && i < sys.bus_offset[b] + sys.bus_size[b]) bus = sys.buses[b].id;
    throw DivergenceError(t, bus,
                          "state diverged at t=" + std::to_string(t) +
                              (bus ? " at bus " + std::to_string(bus) : " in the line network"));
  }
}

void record(const CompositeSystem& sys, const Eigen::VectorXd& x, double t, int interval,
            TimeSeries& ts) {
  std::vector<BusSample> row(sys.bus_count());
  const Eigen::VectorXd inj = sys.i_line * x;
  for (int b = 0; b < sys.bus_count(); ++b) {
    const int o = sys.bus_offset[b];
    const int vrow = sys.buses[b].kind == ScenarioBus::Kind::Inverter ? o + 2 : o;
    const DQPair v{x(vrow), x(vrow + 1)};
    const DQPair i{inj(2 * b), inj(2 * b + 1)};
    const Power pw = instantaneous_power(v, i);
    row[b] = BusSample{v.d, v.q, i.d, i.q, pw.p, pw.q};
  }
  ts.t.push_back(t);
  ts.samples.push_back(std::move(row));
  ts.states.push_back(x);
  ts.interval_index.push_back(interval);
}

/// Carry the composite state across a rebuild that appended one single-section
/// connector line and one inverter bus.
Eigen::VectorXd remap_state(const CompositeSystem& old_sys, const CompositeSystem& new_sys,
                            const Eigen::VectorXd& x_old, const ClosedLoopBus& clb,
                            const Eigen::Vector2d& v_ref_new) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(new_sys.n());
  const int ne_old = 2 * old_sys.net.edge_count();
  const int ne_new = 2 * new_sys.net.edge_count();
  x.head(ne_old) = x_old.head(ne_old);  // edge currents keep their order
  x.segment(ne_new, 2 * old_sys.net.cap_count()) =
      x_old.segment(ne_old, 2 * old_sys.net.cap_count());
  for (int b = 0; b < old_sys.bus_count(); ++b)
    x.segment(new_sys.bus_offset[b], old_sys.bus_size[b]) =
        x_old.segment(old_sys.bus_offset[b], old_sys.bus_size[b]);
  // The incoming inverter arrives pre-energized at its isolated equilibrium.
  const Eigen::VectorXd xi = clb.a_c.fullPivLu().solve(-(clb.b_ref * v_ref_new));
  x.segment<6>(new_sys.bus_offset[new_sys.bus_count() - 1]) = xi;
  return x;
}

}  // namespace

RunResult run_scenario(const Scenario& sc) {
  RuntimeState rs = initial_runtime_state(sc);
  RunResult run;
  CompositeSystem sys = build_closed_system(sc, rs);
  const double dt = sc.sim.dt;
  if (dt * max_abs_eigenvalue(sys.a) > 2.5)
    std::cerr << "warning: dt exceeds the RK4 stability guard for the fastest mode\n";

  Eigen::VectorXd x = equilibrium(sys);
  run.intervals.push_back(Interval{0.0, sys, x});

  std::vector<Event> events = sc.events;
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  long step_count = 0;
  double t = 0.0;
  auto integrate_to = [&](double t_stop) {
    const long target = std::lround(t_stop / dt);
    while (step_count < target) {
      if (step_count % sc.sim.record_stride == 0)
        record(sys, x, t, static_cast<int>(run.intervals.size()) - 1, run.series);
      x = step(sys, x, dt);
      ++step_count;
      t = step_count * dt;
      check_divergence(sys, x, t);
    }
  };

  for (const Event& ev : events) {
    if (ev.t > sc.sim.t_end) break;
    integrate_to(ev.t);
    // rs is indexed like sc.buses; sys.buses is sorted by id with ids 1..N,
    // so the system block of bus `id` sits at index id-1.
    const auto rs_idx = static_cast<std::size_t>(
        std::find_if(sc.buses.begin(), sc.buses.end(),
                     [&](const ScenarioBus& b) { return b.id == ev.bus; }) -
        sc.buses.begin());
    switch (ev.type) {
      case Event::Type::LoadOn:
      case Event::Type::LoadOff: {
        rs.switched_on[rs_idx] = ev.type == Event::Type::LoadOn;
        const CompositeSystem next = build_closed_system(sc, rs);
        // same layout: switching changes coefficients, not dimensions
        if (ev.type == Event::Type::LoadOff) x.segment<2>(next.bus_offset[ev.bus - 1] + 4).setZero();
        sys = next;
        break;
      }
      case Event::Type::Broadcast: {
        rs.v_ref[rs_idx] = ev.v_ref;
        sys = build_closed_system(sc, rs);
        break;
      }
      case Event::Type::PlugIn: {
        rs.plugged.push_back(RuntimeState::Plugged{ev.bus, ev.connector, ev.v_ref});
        const CompositeSystem next = build_closed_system(sc, rs);
        x = remap_state(sys, next, x, scenario_loop(sc), ev.v_ref);
        sys = next;
        break;
      }
    }
    if (dt * max_abs_eigenvalue(sys.a) > 2.5)
      std::cerr << "warning: dt exceeds the RK4 stability guard after event at t=" << ev.t << "\n";
    run.intervals.push_back(Interval{ev.t, sys, equilibrium(sys)});
  }
  integrate_to(sc.sim.t_end);
  record(sys, x, t, static_cast<int>(run.intervals.size()) - 1, run.series);
  run.final_state = x;
  return run;
}

std::vector<std::vector<Power>> power_trace(const TimeSeries& ts) {
  std::vector<std::vector<Power>> out(ts.samples.empty() ? 0 : ts.samples.back().size());
  for (const auto& row : ts.samples)
    for (std::size_t b = 0; b < row.size(); ++b)
      out[b].push_back(instantaneous_power({row[b].vd, row[b].vq}, {row[b].id, row[b].iq}));
  return out;
}

LyapunovTrace lyapunov_trace(const RunResult& run, const Eigen::MatrixXd& p_inverter) {
  if (p_inverter.rows() != 6 || p_inverter.cols() != 6)
    throw std::invalid_argument("lyapunov_trace: storage matrix must be 6x6");
  LyapunovTrace tr;
  tr.monotone = true;
  const auto& ts = run.series;
  for (std::size_t i = 0; i < ts.t.size(); ++i) {
    const Interval& iv = run.intervals[static_cast<std::size_t>(ts.interval_index[i])];
    const CompositeSystem& sys = iv.system;
    const Eigen::VectorXd d = ts.states[i] - iv.x_eq;
    double v = line_energy(sys.net, ts.states[i].head(sys.line_states),
                           iv.x_eq.head(sys.line_states));
    for (int b = 0; b < sys.bus_count(); ++b) {
      const int o = sys.bus_offset[b];
      switch (sys.buses[b].kind) {
        case ScenarioBus::Kind::Inverter:
          v += 0.5 * d.segment<6>(o).dot(p_inverter * d.segment<6>(o));
          break;
        case ScenarioBus::Kind::Load: {
          const LoadBusParams& lp = sys.buses[b].load;
          v += 0.5 * lp.c_shunt * d.segment<2>(o).squaredNorm();
          if (lp.static_load.q > 0.0) {
            const double l1 = lp.v_nom * lp.v_nom / (sys.omega_s * lp.static_load.q);
            v += 0.5 * l1 * d.segment<2>(o + 2).squaredNorm();
          }
          if (sys.switched_on[b] && lp.switched_load.q > 0.0) {
            const double l2 = lp.v_nom * lp.v_nom / (sys.omega_s * lp.switched_load.q);
            v += 0.5 * l2 * d.segment<2>(o + 4).squaredNorm();
          }
          break;
        }
        case ScenarioBus::Kind::Passive:
          v += 0.5 * sys.buses[b].c_shunt * d.segment<2>(o).squaredNorm();
          break;
      }
    }
    tr.t.push_back(ts.t[i]);
    tr.v.push_back(v);
  }
  // monotonicity between events
  double interval_start_v = tr.v.empty() ? 0.0 : tr.v.front();
  for (std::size_t i = 1; i < tr.v.size(); ++i) {
    if (ts.interval_index[i] != ts.interval_index[i - 1]) {
      interval_start_v = tr.v[i];
      continue;
    }
    const double tol = 1e-6 * interval_start_v + 1e-12;
    const double rise = tr.v[i] - tr.v[i - 1];
    if (rise > tol) {
      tr.monotone = false;
      tr.worst_violation = std::max(tr.worst_violation, rise);
    }
  }
  return tr;
}

}  // namespace gridforge
