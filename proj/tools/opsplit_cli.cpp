// Command-line front end: configuration-driven solving, displacement
// estimation, normal-problem solving, and the scenario regression registry.
//
// Exit codes (stable contract):
//   solve:        0 converged, 2 non-convergence, 1 config error
//   estimate-v:   0 estimate written, 3 numeric overflow, 1 config error
//   normal-solve: 0 found, 4 divergent, 5 inconclusive, 1 config error
//   scenarios:    0 all assertions pass, 2 assertion failure, 1 unknown id
//   list-scenarios: 0

#include "opsplit/scenarios.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace opsplit;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<long> max_iter;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool closed_form = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_closed_form) {
  cmd->add_option("--config", args.config_path, "path to the JSON problem configuration")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: config out_dir or '.')");
  cmd->add_option("--max-iter", args.max_iter, "override the config iteration budget");
  cmd->add_option("--tol", args.tol, "override the config step-norm tolerance");
  cmd->add_option("--seed", args.seed, "override the config seed (recorded in outputs)");
  if (with_closed_form) {
    cmd->add_flag("--closed-form", args.closed_form,
                  "use the affine closed form for the displacement (affine problems only)");
  }
}

RunConfig load_with_overrides(const CommonArgs& args) {
  RunConfig cfg = load_config_file(args.config_path);
  if (args.max_iter) cfg.max_iter = *args.max_iter;
  if (args.tol) cfg.tol = *args.tol;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

std::string ensure_out_dir(const RunConfig& cfg) {
  const std::string dir = cfg.out_dir.value_or(".");
  std::filesystem::create_directories(dir);
  return dir;
}

IterateOptions iterate_options(const RunConfig& cfg) {
  IterateOptions opts;
  opts.max_iter = cfg.max_iter;
  opts.tol = cfg.tol;
  opts.divergence_threshold = cfg.divergence_threshold;
  return opts;
}

Json with_config_echo(Json payload, const RunConfig& cfg) {
  payload["config"] = to_json(cfg);
  return payload;
}

int cmd_solve(const CommonArgs& args) {
  const RunConfig cfg = load_with_overrides(args);
  const std::string out = ensure_out_dir(cfg);
  const BuiltProblem built = build_problem(cfg);
  try {
    const Solution sol = solve_primal(built.problem, built.x0, iterate_options(cfg));
    Json j = to_json(sol);
    if (built.blocks > 1) j["z_average"] = to_json(average(sol.z, built.blocks));
    write_json_file(out + "/solution.json", with_config_echo(std::move(j), cfg));
    write_trace_csv_file(out + "/trace.csv", sol.trace, built.problem.dim());
    std::printf("converged in %ld iterations, residual %s\n", sol.trace.total_iterations,
                format_double(sol.primal_residual).c_str());
    return 0;
  } catch (const ConvergenceFailure& e) {
    write_trace_csv_file(out + "/trace.csv", e.trace, built.problem.dim());
    std::fprintf(stderr, "no solution found: %s\n", e.what());
    return 2;
  }
}

int cmd_estimate_v(const CommonArgs& args) {
  const RunConfig cfg = load_with_overrides(args);
  const std::string out = ensure_out_dir(cfg);
  const BuiltProblem built = build_problem(cfg);
  const FixedPointMap map = FixedPointMap::forward_backward(built.problem);
  Json j;
  if (args.closed_form) {
    if (!is_affine(map)) {
      std::fprintf(stderr, "config error: --closed-form requires an affine problem\n");
      return 1;
    }
    const Vector v = v_closed_form(map);
    j["v"] = to_json(v);
    j["closed_form"] = true;
    std::printf("closed-form displacement norm %s\n", format_double(v.norm()).c_str());
  } else {
    EstimateOptions opts;
    opts.max_iter = cfg.max_iter;
    opts.early_accept = cfg.tol;
    try {
      const DisplacementEstimate est = estimate_v_iterative(map, built.x0, opts);
      j = to_json(est);
      j["closed_form"] = false;
      std::printf("estimated displacement norm %s after %ld iterations\n",
                  format_double(est.v.norm()).c_str(), est.iterations);
    } catch (const NumericError& e) {
      std::fprintf(stderr, "overflow during estimation: %s\n", e.what());
      return 3;
    }
  }
  write_json_file(out + "/estimate.json", with_config_echo(std::move(j), cfg));
  return 0;
}

int cmd_normal_solve(const CommonArgs& args) {
  const RunConfig cfg = load_with_overrides(args);
  const std::string out = ensure_out_dir(cfg);
  const BuiltProblem built = build_problem(cfg);
  const FixedPointMap map = FixedPointMap::forward_backward(built.problem);
  NormalSolveOptions opts;
  opts.max_iter = cfg.max_iter;
  opts.tol = cfg.tol;
  opts.divergence_threshold = cfg.divergence_threshold;
  opts.closed_form = args.closed_form;
  const NormalSolveReport rep = normal_solve(map, built.x0, opts);
  Json j = to_json(rep);
  if (built.blocks > 1 && rep.status == NormalSolveStatus::normal_solution_found) {
    j["z_average"] = to_json(average(rep.z, built.blocks));
    j["v_average"] = to_json(average(rep.v, built.blocks));
  }
  write_json_file(out + "/report.json", with_config_echo(std::move(j), cfg));
  write_trace_csv_file(out + "/trace.csv", rep.trace, built.problem.dim());
  std::printf("normal solve status: %s (residual %s)\n", to_string(rep.status),
              format_double(rep.residual).c_str());
  switch (rep.status) {
    case NormalSolveStatus::normal_solution_found: return 0;
    case NormalSolveStatus::divergent: return 4;
    case NormalSolveStatus::inconclusive: return 5;
  }
  return 5;
}

void write_scenario_outputs(const ScenarioReport& report, const std::string& out) {
  write_json_file(out + "/" + report.id + ".report.json", to_json(report));
  for (const auto& [name, trace] : report.traces) {
    if (trace.iterates.empty()) continue;
    write_trace_csv_file(out + "/" + report.id + "." + name + ".trace.csv", trace,
                         trace.iterates.front().size());
  }
}

int cmd_scenarios(const std::string& id, const std::string& out_dir) {
  std::vector<ScenarioReport> reports;
  if (id.empty()) {
    reports = run_all_scenarios();
  } else {
    reports.push_back(run_scenario(id));
  }
  bool all_passed = true;
  for (const auto& report : reports) {
    std::fputs(format_report_text(report).c_str(), stdout);
    all_passed = all_passed && report.all_passed();
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      write_scenario_outputs(report, out_dir);
    }
  }
  return all_passed ? 0 : 2;
}

int cmd_list_scenarios() {
  for (const auto& info : opsplit::list_scenarios()) {
    std::printf("%-26s %s\n", info.id.c_str(), info.description.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-splitting solver and displacement toolkit"};
  app.require_subcommand(1);

  CommonArgs solve_args, estimate_args, normal_args;
  std::string scenario_id, scenario_out;

  CLI::App* solve = app.add_subcommand("solve", "run the splitting iteration to a zero");
  add_common(solve, solve_args, false);

  CLI::App* estimate =
      app.add_subcommand("estimate-v", "estimate the minimal displacement vector");
  add_common(estimate, estimate_args, true);

  CLI::App* normal =
      app.add_subcommand("normal-solve", "solve the displacement-perturbed problem");
  add_common(normal, normal_args, true);

  CLI::App* scen = app.add_subcommand("scenarios", "run the regression scenarios");
  scen->add_option("id", scenario_id, "scenario id (omit to run all)");
  scen->add_option("--out", scenario_out, "directory for per-scenario reports and traces");

  app.add_subcommand("list-scenarios", "list the scenario registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_args);
    if (estimate->parsed()) return cmd_estimate_v(estimate_args);
    if (normal->parsed()) return cmd_normal_solve(normal_args);
    if (scen->parsed()) return cmd_scenarios(scenario_id, scenario_out);
    return cmd_list_scenarios();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
