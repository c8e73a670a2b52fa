#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridforge/certify.hpp"
#include "gridforge/linalg.hpp"
#include "gridforge/scenario.hpp"
#include "gridforge/sim.hpp"
#include "gridforge/synthesize.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("GRIDFORGE_LOG");
  if (!env) return LogLevel::Info;
  const std::string v(env);
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

void info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cout << msg << "\n";
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

struct OutputWriter {
  fs::path dir;
  json manifest = json::array();

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    out.close();
    manifest.push_back(
        {{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
    info("wrote " + path.string());
  }

  void finish() {
    const std::string m = json{{"files", manifest}}.dump(2);
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json");
    out << m;
    info("wrote " + (dir / "manifest.json").string());
  }
};

json report_json(const gridforge::CertificationReport& rep) {
  return {{"hurwitz_ok", rep.hurwitz_ok},       {"hurwitz_margin", rep.hurwitz_margin},
          {"gains_ok", rep.gains_ok},           {"max_abs_gain", rep.max_abs_gain},
          {"freq_ok", rep.freq_ok},             {"worst_omega", rep.worst_omega},
          {"worst_gap", rep.worst_gap},         {"osp_ok", rep.osp_ok},
          {"certified_rho", rep.certified_rho}, {"paths_consistent", rep.paths_consistent}};
}

json grid_json(const gridforge::FreqGrid& grid) {
  return {{"points", grid.points},
          {"omega_min", grid.omega_min},
          {"omega_max", grid.omega_max},
          {"refine_rounds", grid.refine_rounds},
          {"refine_points", grid.refine_points}};
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string certificate_text(const gridforge::CertificationReport& rep,
                             const gridforge::FreqGrid& grid) {
  json j;
  j["report"] = report_json(rep);
  j["grid"] = grid_json(grid);
  if (rep.certificate) {
    const auto& c = *rep.certificate;
    json p = json::array();  // row-major, full precision
    for (Eigen::Index i = 0; i < c.p.rows(); ++i)
      for (Eigen::Index k = 0; k < c.p.cols(); ++k) p.push_back(c.p(i, k));
    j["certificate"] = {{"rho", c.rho},
                        {"p_rows", c.p.rows()},
                        {"p_row_major", p},
                        {"lmi_max_eig", c.lmi_max_eig},
                        {"p_min_eig", c.p_min_eig}};
  }
  return j.dump(2);
}

gridforge::ClosedLoopBus loop_of(const gridforge::Scenario& sc) {
  if (!sc.gains) throw gridforge::ScenarioError("scenario has no 'gains' block");
  return close_loop(augment(assemble_plant(sc.inverter, sc.frame), sc.zv), *sc.gains);
}

int require_clean(const gridforge::Scenario& sc) {
  const auto issues = gridforge::validate_scenario(sc);
  for (const auto& msg : issues) std::cerr << "validation: " << msg << "\n";
  return issues.empty() ? 0 : 2;
}

int cmd_validate(const std::string& path) {
  const gridforge::Scenario sc = gridforge::parse_scenario(path);
  const auto issues = gridforge::validate_scenario(sc);
  for (const auto& msg : issues) std::cout << "issue: " << msg << "\n";
  const bool has_inverter =
      std::any_of(sc.buses.begin(), sc.buses.end(), [](const gridforge::ScenarioBus& b) {
        return b.kind == gridforge::ScenarioBus::Kind::Inverter;
      });
  if (issues.empty() && has_inverter) {
    if (!sc.gains) {
      std::cout << "warning: inverter buses present but no gains block (simulate will fail)\n";
    } else {
      const auto clb = loop_of(sc);
      if (gridforge::max_real_eigenvalue(clb.a_c) >= 0.0)
        std::cout << "warning: inverter closed loop is not Hurwitz\n";
      else if (!gridforge::osp_freq_test(clb, sc.tuning.rho_min, gridforge::FreqGrid{}, true))
        std::cout << "warning: inverter loop is uncertified at rho_min (coarse screen)\n";
    }
  }
  if (issues.empty()) info("scenario is valid: " + sc.name);
  return issues.empty() ? 0 : 2;
}

int cmd_certify(const std::string& path, const std::string& out, int grid_points) {
  const gridforge::Scenario sc = gridforge::parse_scenario(path);
  if (int rc = require_clean(sc)) return rc;
  gridforge::FreqGrid grid;
  if (grid_points > 0) grid.points = grid_points;
  const auto clb = loop_of(sc);
  info("certifying " + sc.name + " at rho_min=" + std::to_string(sc.tuning.rho_min));
  const auto rep = gridforge::certify_bus(clb, *sc.gains, sc.tuning, grid);
  std::cout << "hurwitz: " << (rep.hurwitz_ok ? "ok" : "FAIL") << " (margin " << rep.hurwitz_margin
            << ")\n"
            << "gains:   " << (rep.gains_ok ? "ok" : "FAIL") << " (max |gain| " << rep.max_abs_gain
            << ")\n"
            << "freq:    " << (rep.freq_ok ? "ok" : "FAIL") << " (worst gap " << rep.worst_gap
            << " at omega " << rep.worst_omega << ")\n"
            << "osp:     " << (rep.osp_ok ? "ok" : "FAIL") << " (certified rho "
            << rep.certified_rho << ")\n";
  OutputWriter w{out};
  w.write("certificate.json", certificate_text(rep, grid));
  w.finish();
  return 0;
}

int cmd_synthesize(const std::string& path, const std::string& out, long seed) {
  const gridforge::Scenario sc = gridforge::parse_scenario(path);
  if (int rc = require_clean(sc)) return rc;
  gridforge::SynthesisConfig cfg = sc.synthesis;
  cfg.spec = sc.tuning;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  const auto plant = augment(assemble_plant(sc.inverter, sc.frame), sc.zv);
  info("synthesizing: " + std::to_string(cfg.starts) + " starts x " +
       std::to_string(cfg.budget_per_start) + " evaluations, seed " + std::to_string(cfg.seed));
  const auto res = gridforge::synthesize_controller(plant, cfg);
  std::cout << (res.feasible ? "feasible" : "INFEASIBLE") << ", certified rho "
            << res.report.certified_rho << " from start " << res.start_index << "\n";
  json g;
  g["k"] = matrix_rows(res.gains.k);
  g["m"] = matrix_rows(res.gains.m);
  g["feasible"] = res.feasible;
  g["start_index"] = res.start_index;
  g["report"] = report_json(res.report);
  g["config"] = {{"starts", cfg.starts},
                 {"budget_per_start", cfg.budget_per_start},
                 {"seed", cfg.seed},
                 {"step_init", cfg.step_init},
                 {"step_min", cfg.step_min},
                 {"weights",
                  {{"hurwitz", cfg.weights.hurwitz},
                   {"gain", cfg.weights.gain},
                   {"freq", cfg.weights.freq}}}};
  OutputWriter w{out};
  w.write("gains.json", g.dump(2));
  w.write("certificate.json", certificate_text(res.report, gridforge::FreqGrid{}));
  w.finish();
  return res.feasible ? 0 : 4;
}

int cmd_simulate(const std::string& path, const std::string& out, double dt_override) {
  gridforge::Scenario sc = gridforge::parse_scenario(path);
  if (dt_override > 0.0) sc.sim.dt = dt_override;
  if (int rc = require_clean(sc)) return rc;
  info("simulating " + sc.name + " to t=" + std::to_string(sc.sim.t_end) +
       " at dt=" + std::to_string(sc.sim.dt));
  const auto run = gridforge::run_scenario(sc);

  std::ostringstream csv;
  csv << "t,bus,vd,vq,id,iq,p,q\n";
  csv.precision(10);
  for (std::size_t i = 0; i < run.series.t.size(); ++i)
    for (std::size_t b = 0; b < run.series.samples[i].size(); ++b) {
      const auto& s = run.series.samples[i][b];
      csv << run.series.t[i] << ',' << (b + 1) << ',' << s.vd << ',' << s.vq << ',' << s.id << ','
          << s.iq << ',' << s.p << ',' << s.q << "\n";
    }

  json events = json::array();
  for (const auto& ev : sc.events) {
    const char* type = ev.type == gridforge::Event::Type::LoadOn     ? "load_on"
                       : ev.type == gridforge::Event::Type::LoadOff  ? "load_off"
                       : ev.type == gridforge::Event::Type::Broadcast ? "broadcast"
                                                                      : "plug_in";
    events.push_back({{"t", ev.t}, {"type", type}, {"bus", ev.bus}});
  }
  json meta;
  meta["scenario"] = sc.name;
  meta["scenario_fnv1a64"] = hex64(fnv1a64(gridforge::serialize_scenario(sc)));
  meta["dt"] = sc.sim.dt;
  meta["t_end"] = sc.sim.t_end;
  meta["record_stride"] = sc.sim.record_stride;
  meta["samples"] = run.series.t.size();
  meta["final_bus_count"] = run.intervals.back().system.bus_count();
  meta["events"] = events;

  OutputWriter w{out};
  w.write("timeseries.csv", csv.str());
  w.write("run.json", meta.dump(2));
  w.finish();
  info("done: " + std::to_string(run.series.t.size()) + " samples");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridforge: microgrid model assembly, passivity certification, gain synthesis, "
               "and closed-loop simulation"};
  app.require_subcommand(1);

  std::string file, out = "out";
  long seed = -1;
  double dt = 0.0;
  int grid = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", file, "scenario JSON file")->required();
    sub->add_option("--out", out, "output directory (default: out)");
    sub->add_option("--seed", seed, "override synthesis seed");
    sub->add_option("--dt", dt, "override simulation time step, seconds");
    sub->add_option("--grid", grid, "override frequency-grid point count");
  };
  CLI::App* certify = app.add_subcommand("certify", "certify a controller against the tuning spec");
  CLI::App* synthesize = app.add_subcommand("synthesize", "search for gains maximizing the OSP index");
  CLI::App* simulate = app.add_subcommand("simulate", "integrate a closed-loop scenario");
  CLI::App* validate = app.add_subcommand("validate", "check a scenario file and report issues");
  for (CLI::App* sub : {certify, synthesize, simulate, validate}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(certify)) return cmd_certify(file, out, grid);
    if (app.got_subcommand(synthesize)) return cmd_synthesize(file, out, seed);
    if (app.got_subcommand(simulate)) return cmd_simulate(file, out, dt);
    return cmd_validate(file);
  } catch (const gridforge::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gridforge::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
