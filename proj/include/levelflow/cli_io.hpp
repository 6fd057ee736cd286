#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "levelflow/config.hpp"
#include "levelflow/coupling.hpp"

namespace levelflow::cli_io {

/// One row of the metrics time series. Integrals run over the tracked phase
/// (the sign selected by metrics.phase).
struct MetricsRow {
  double t = 0.0;
  /// Center of mass of the tracked phase; 0 when the phase is empty.
  double x_c = 0.0, y_c = 0.0;
  /// Mean vertical velocity of the tracked phase.
  double u_c = 0.0;
  double area = 0.0;
  double div_norm = 0.0;
  double min_h = 0.0;
  long n_cells = 0;
  double dt = 0.0;
  /// Set when the tracked phase has zero area.
  bool phase_empty = false;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Sharp-indicator integrals over {phase * phi > 0}; cells whose nodal values
/// change sign are subsampled with 4x4 subcells.
MetricsRow compute_metrics(const coupling::SimulationState& state, const ScenarioConfig& c, double dt = 0.0);

struct ConvergenceRow {
  double dt = 0.0;
  double h = 0.0;
  double error = 0.0;
  /// log2(previous error / error); NaN on the first rung.
  double rate = 0.0;
};
using ConvergenceTable = std::vector<ConvergenceRow>;

/// Runs `rungs` fixed-step runs to t_final, halving dt (and h0 when
/// study.refine_mesh) on every rung, and measures ||phi^N - reference||_L2.
ConvergenceTable convergence_study(const ScenarioConfig& base, int rungs);

/// L2 distance between the level set and the study reference at the end of a run.
double study_error(const coupling::SimulationState& state, const ScenarioConfig& c);

/// Legacy ASCII VTK unstructured grid of the Q1 level-set nodes. `info` supplies
/// the stabilization viscosities; they are written as zero when absent.
void write_vtk(const coupling::SimulationState& state, const ScenarioConfig& c, const coupling::StepInfo* info,
               const std::filesystem::path& path);

std::string csv_header();
void write_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_csv(const std::filesystem::path& path);
void write_convergence_csv(const ConvergenceTable& table, const std::filesystem::path& path);

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitSolver = 3 };

struct RunResult {
  int status = kExitOk;
  std::vector<MetricsRow> rows;
  std::optional<coupling::SimulationState> final_state;
  std::string message;
};

/// Per-step observer, called after every completed step.
using StepObserver = std::function<void(const coupling::SimulationState&, const coupling::StepInfo&)>;

/// Time loop to t_final writing metrics.csv, periodic snapshots and a final
/// snapshot into c.output_dir. An empty output_dir writes nothing. On solver
/// failure the last good state is written to last_good.vtk.
RunResult run(const ScenarioConfig& c, const StepObserver& observer = {});

/// Directory holding the built-in scenario files.
std::filesystem::path scenario_dir();
/// Names of the built-in scenarios (file stems, sorted).
std::vector<std::string> builtin_scenarios();
/// Loads a scenario file, or a built-in scenario by name.
ScenarioConfig load_scenario(const std::string& path_or_name);

}  // namespace levelflow::cli_io
