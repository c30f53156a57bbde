// End-to-end tests of the command-line binary: exit codes, output files,
// CSV header contract, determinism, and flag overrides. The binary path
// arrives via the CLI_BIN compile definition.

#include "opsplit/serialize.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "opsplit_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
  const fs::path err = work_dir() / ("stderr" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd =
      std::string(CLI_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << body;
  return p;
}

const char* kFeasiblePair = R"({
  "dim": 2,
  "x0": [4.0, -3.0],
  "a": {"kind": "constant", "value": [1.0, 2.0]},
  "b": {"kind": "normal_cone", "set": {"kind": "orthant", "signs": [1, 1]}}
})";

const char* kDriftPair = R"({
  "dim": 2,
  "x0": [0.0, 0.0],
  "max_iter": 200,
  "a": {"kind": "constant", "value": [1.0, 0.0]},
  "b": {"kind": "constant", "value": [0.0, 1.0]}
})";

const char* kHyperbolaMap = R"({
  "dim": 2,
  "x0": [2.0, 2.0],
  "max_iter": 2000,
  "map": {
    "u": {"kind": "hyperbola_epigraph"},
    "v": {"kind": "translate", "shift": [1.0, 0.0],
          "inner": {"kind": "affine_subspace", "offset": [0.0, 0.0],
                    "span": [[1.0], [0.0]]}}
  }
})";

}  // namespace

TEST_CASE("solve writes solution and trace for a feasible pair", "[cli]") {
  const fs::path cfg = write_config("feasible.json", kFeasiblePair);
  const fs::path out = work_dir() / "solve_feasible";
  const CliResult r = run_cli("solve --config " + cfg.string() + " --out " + out.string());
  CAPTURE(r.err);
  REQUIRE(r.code == 0);

  const auto solution = opsplit::Json::parse(slurp(out / "solution.json"));
  REQUIRE(solution.contains("z"));
  const std::vector<double> z = solution["z"].get<std::vector<double>>();
  REQUIRE(z.size() == 2);
  CHECK(std::abs(z[0]) <= 1e-6);
  CHECK(std::abs(z[1]) <= 1e-6);
  CHECK(solution["dual_point"][0].get<double>() == Catch::Approx(1.0).margin(1e-6));
  REQUIRE(solution.contains("config"));
  CHECK(solution["config"]["dim"].get<long>() == 2);

  const std::string csv = slurp(out / "trace.csv");
  REQUIRE(csv.rfind("n,step_norm,displacement_residual,x_0,x_1\n", 0) == 0);
}

TEST_CASE("solve exits 2 on drift but still writes the trace", "[cli]") {
  const fs::path cfg = write_config("drift.json", kDriftPair);
  const fs::path out = work_dir() / "solve_drift";
  const CliResult r = run_cli("solve --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("max_iter") != std::string::npos);
  CHECK(fs::exists(out / "trace.csv"));
  CHECK_FALSE(fs::exists(out / "solution.json"));
}

TEST_CASE("invalid config exits 1 with a config error", "[cli]") {
  const fs::path cfg = write_config("no_dim.json", R"({"x0": [0.0]})");
  const CliResult r = run_cli("solve --config " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("config") != std::string::npos);

  const CliResult missing = run_cli("solve --config " + (work_dir() / "nope.json").string());
  CHECK(missing.code == 1);
}

TEST_CASE("estimate-v agrees between iterative and closed form", "[cli]") {
  const fs::path cfg = write_config("drift_est.json", kDriftPair);
  const fs::path out1 = work_dir() / "est_iter";
  const CliResult r1 = run_cli("estimate-v --config " + cfg.string() + " --out " + out1.string());
  CAPTURE(r1.err);
  REQUIRE(r1.code == 0);
  const auto est = opsplit::Json::parse(slurp(out1 / "estimate.json"));
  const std::vector<double> v = est["v"].get<std::vector<double>>();
  REQUIRE(v.size() == 2);
  CHECK(v[0] == Catch::Approx(1.0).margin(1e-8));
  CHECK(v[1] == Catch::Approx(1.0).margin(1e-8));

  const fs::path out2 = work_dir() / "est_closed";
  const CliResult r2 = run_cli("estimate-v --closed-form --config " + cfg.string() +
                               " --out " + out2.string());
  REQUIRE(r2.code == 0);
  const auto closed = opsplit::Json::parse(slurp(out2 / "estimate.json"));
  CHECK(closed["closed_form"].get<bool>());
  const std::vector<double> vc = closed["v"].get<std::vector<double>>();
  CHECK(std::abs(vc[0] - v[0]) <= 1e-6);
  CHECK(std::abs(vc[1] - v[1]) <= 1e-6);
}

TEST_CASE("estimate-v --closed-form rejects non-affine maps", "[cli]") {
  const fs::path cfg = write_config("feasible_cf.json", kFeasiblePair);
  const CliResult r = run_cli("estimate-v --closed-form --config " + cfg.string() +
                              " --out " + (work_dir() / "cf_reject").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("affine") != std::string::npos);
}

TEST_CASE("normal-solve reports a solution on a feasible pair", "[cli]") {
  const fs::path cfg = write_config("feasible_ns.json", kFeasiblePair);
  const fs::path out = work_dir() / "ns_feasible";
  const CliResult r = run_cli("normal-solve --config " + cfg.string() + " --out " + out.string());
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  const auto report = opsplit::Json::parse(slurp(out / "report.json"));
  CHECK(report["status"].get<std::string>() == "normal_solution_found");
  CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("normal-solve is inconclusive on the slow hyperbola escape", "[cli]") {
  const fs::path cfg = write_config("hyperbola.json", kHyperbolaMap);
  const fs::path out = work_dir() / "ns_hyperbola";
  const CliResult r = run_cli("normal-solve --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 5);
  const auto report = opsplit::Json::parse(slurp(out / "report.json"));
  CHECK(report["status"].get<std::string>() == "inconclusive");
}

TEST_CASE("scenario commands run, list, and reject unknown ids", "[cli]") {
  const CliResult one = run_cli("scenarios orthant-shift");
  CAPTURE(one.out, one.err);
  CHECK(one.code == 0);
  CHECK(one.out.find("orthant-shift") != std::string::npos);

  const CliResult unknown = run_cli("scenarios no-such-scenario");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("unknown scenario") != std::string::npos);

  const CliResult listing = run_cli("list-scenarios");
  CHECK(listing.code == 0);
  CHECK(listing.out.find("orthant-shift") != std::string::npos);
  CHECK(listing.out.find("fb-dr-displacement-range") != std::string::npos);
  long lines = 0;
  for (char ch : listing.out) {
    if (ch == '\n') ++lines;
  }
  CHECK(lines >= 12);
}

TEST_CASE("scenario reports land in the output directory", "[cli]") {
  const fs::path out = work_dir() / "scenario_out";
  const CliResult r = run_cli("scenarios orthant-shift --out " + out.string());
  REQUIRE(r.code == 0);
  const auto report = opsplit::Json::parse(slurp(out / "orthant-shift.report.json"));
  CHECK(report["all_passed"].get<bool>());
}

TEST_CASE("repeated solves produce byte-identical traces", "[cli]") {
  const fs::path cfg = write_config("feasible_det.json", kFeasiblePair);
  const fs::path out1 = work_dir() / "det1";
  const fs::path out2 = work_dir() / "det2";
  REQUIRE(run_cli("solve --config " + cfg.string() + " --out " + out1.string()).code == 0);
  REQUIRE(run_cli("solve --config " + cfg.string() + " --out " + out2.string()).code == 0);
  const std::string t1 = slurp(out1 / "trace.csv");
  const std::string t2 = slurp(out2 / "trace.csv");
  REQUIRE(!t1.empty());
  CHECK(t1 == t2);
}

TEST_CASE("flag overrides reach the run and the config echo", "[cli]") {
  const fs::path cfg = write_config("feasible_flags.json", kFeasiblePair);
  const fs::path out = work_dir() / "flags";
  const CliResult r = run_cli("solve --config " + cfg.string() + " --out " + out.string() +
                              " --max-iter 500 --tol 1e-10 --seed 7");
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  const auto solution = opsplit::Json::parse(slurp(out / "solution.json"));
  CHECK(solution["config"]["seed"].get<long>() == 7);
  CHECK(solution["config"]["max_iter"].get<long>() == 500);
  CHECK(solution["config"]["tol"].get<double>() == 1e-10);

  const CliResult bare = run_cli("");
  CHECK(bare.code == 1);
}
