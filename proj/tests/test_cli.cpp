#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gridforge/scenario.hpp"

using namespace gridforge;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GF_CLI_PATH;
const std::string kDataDir = GF_DATA_DIR;

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("gridforge_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_scenario(const TempDir& dir, const std::string& name, const Scenario& sc) {
  const fs::path p = dir.path / name;
  std::ofstream out(p);
  out << serialize_scenario(sc);
  return p;
}

}  // namespace

TEST_CASE("validate accepts the shipped presets") {
  for (const char* name : {"case_study.json", "plug_and_play.json", "single_inverter.json"})
    CHECK(run_cli("validate " + kDataDir + "/" + name) == 0);
}

TEST_CASE("missing and malformed files exit with code 2") {
  TempDir tmp("malformed");
  const fs::path bad = tmp.path / "bad.json";
  std::ofstream(bad) << "{ this is not json";
  CHECK(run_cli("validate " + bad.string()) == 2);
  CHECK(run_cli("simulate " + tmp.path.string() + "/does_not_exist.json") == 2);
}

TEST_CASE("semantic validation failure exits with code 2") {
  TempDir tmp("semantic");
  Scenario sc = parse_scenario(kDataDir + "/case_study.json");
  sc.events[0].bus = 99;
  const fs::path p = write_scenario(tmp, "bad_event.json", sc);
  CHECK(run_cli("validate " + p.string()) == 2);
  CHECK(run_cli("simulate " + p.string()) == 2);
}

TEST_CASE("simulate writes the timeseries bundle") {
  TempDir tmp("simulate");
  const fs::path out = tmp.path / "out";
  REQUIRE(run_cli("simulate " + kDataDir + "/single_inverter.json --out " + out.string()) == 0);

  const std::string csv = slurp(out / "timeseries.csv");
  CHECK(csv.rfind("t,bus,vd,vq,id,iq,p,q\n", 0) == 0);

  const auto meta = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(meta["scenario"] == "single_inverter");
  CHECK(meta["final_bus_count"] == 2);
  CHECK(meta["samples"].get<int>() > 1000);

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["files"].size() == 2);
  for (const auto& f : manifest["files"]) {
    CHECK(fs::exists(out / f["file"].get<std::string>()));
    CHECK(f["bytes"].get<std::size_t>() ==
          fs::file_size(out / f["file"].get<std::string>()));
  }
}

TEST_CASE("certify emits a machine-checkable certificate") {
  TempDir tmp("certify");
  const fs::path out = tmp.path / "out";
  REQUIRE(run_cli("certify " + kDataDir + "/single_inverter.json --out " + out.string()) == 0);
  const auto cert = nlohmann::json::parse(slurp(out / "certificate.json"));
  CHECK(cert["report"]["hurwitz_ok"] == true);
  CHECK(cert["report"]["osp_ok"] == true);
  CHECK(cert["report"]["certified_rho"].get<double>() >= 0.39);
  REQUIRE(cert.contains("certificate"));
  CHECK(cert["certificate"]["p_rows"] == 6);
  CHECK(cert["certificate"]["p_row_major"].size() == 36);
  CHECK(cert["certificate"]["p_min_eig"].get<double>() > 0.0);
}

TEST_CASE("diverging simulation exits with code 3") {
  TempDir tmp("diverge");
  Scenario sc = parse_scenario(kDataDir + "/case_study.json");
  sc.gains->k = -sc.gains->k;
  const fs::path p = write_scenario(tmp, "unstable.json", sc);
  CHECK(run_cli("simulate " + p.string()) == 3);
}

TEST_CASE("infeasible synthesis exits with code 4") {
  TempDir tmp("infeasible");
  Scenario sc = parse_scenario(kDataDir + "/single_inverter.json");
  sc.tuning.p_max = 0.001;
  sc.synthesis.starts = 1;
  sc.synthesis.budget_per_start = 150;
  const fs::path p = write_scenario(tmp, "hopeless.json", sc);
  const fs::path out = tmp.path / "out";
  CHECK(run_cli("synthesize " + p.string() + " --out " + out.string()) == 4);
  const auto gains = nlohmann::json::parse(slurp(out / "gains.json"));
  CHECK(gains["feasible"] == false);
}
