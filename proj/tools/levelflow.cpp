#include <CLI11.hpp>
#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "levelflow/cli_io.hpp"
#include "levelflow/error.hpp"

using namespace levelflow;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive level-set two-phase flow solver"};
  app.require_subcommand(1);

  std::string file;
  std::optional<std::string> out_dir;
  std::optional<double> t_final, dt_max;
  std::optional<int> every;
  auto* run = app.add_subcommand("run", "Run a scenario to its final time");
  run->add_option("scenario", file, "Scenario file or built-in scenario name")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--t-final", t_final, "Final time override")->check(CLI::PositiveNumber);
  run->add_option("--dt-max", dt_max, "Largest time step override")->check(CLI::PositiveNumber);
  run->add_option("--every", every, "Snapshot every N steps (0 disables)")->check(CLI::NonNegativeNumber);

  int ladder = 0;
  auto* study = app.add_subcommand("study", "Time-step convergence study");
  study->add_option("scenario", file, "Scenario file or built-in scenario name")->required();
  study->add_option("--ladder", ladder, "Number of rungs")->required()->check(CLI::PositiveNumber);
  study->add_option("--out", out_dir, "Output directory");

  auto* list = app.add_subcommand("list-scenarios", "List the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli_io::kExitConfig;
  }

  if (auto threads = env("LEVELFLOW_THREADS")) Eigen::setNbThreads(std::max(1, std::atoi(threads->c_str())));

  if (list->parsed()) {
    for (const auto& name : cli_io::builtin_scenarios()) std::cout << name << '\n';
    return cli_io::kExitOk;
  }

  ScenarioConfig c;
  try {
    c = cli_io::load_scenario(file);
    if (out_dir)
      c.output_dir = *out_dir;
    else if (auto e = env("LEVELFLOW_OUT"))
      c.output_dir = *e;
    if (t_final) c.t_final = *t_final;
    if (dt_max) c.dt_max = *dt_max;
    if (every) c.output_every = *every;
    validate(c);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli_io::kExitConfig;
  }

  if (study->parsed()) {
    try {
      const auto table = cli_io::convergence_study(c, ladder);
      std::printf("%-12s %-12s %-14s %s\n", "dt", "h", "L2 error", "rate");
      for (const auto& r : table) std::printf("%-12.6g %-12.6g %-14.6e %.2f\n", r.dt, r.h, r.error, r.rate);
      if (!c.output_dir.empty()) cli_io::write_convergence_csv(table, std::filesystem::path(c.output_dir) / "convergence.csv");
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return cli_io::kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return cli_io::kExitSolver;
    }
    return cli_io::kExitOk;
  }

  long last_report = -1;
  const auto result = cli_io::run(c, [&](const coupling::SimulationState& s, const coupling::StepInfo& info) {
    if (s.step / 50 != last_report) {
      last_report = s.step / 50;
      std::printf("step %6ld  t=%.6g  dt=%.3e  cells=%zu\n", s.step, s.t, info.dt, s.mesh->size());
      std::fflush(stdout);
    }
  });
  if (result.status == cli_io::kExitConfig) std::cerr << "config error: " << result.message << '\n';
  if (result.status == cli_io::kExitSolver) std::cerr << "solver failure: " << result.message << '\n';
  if (result.status == cli_io::kExitOk && result.final_state)
    std::printf("done: %ld steps, t=%.6g\n", result.final_state->step, result.final_state->t);
  return result.status;
}
