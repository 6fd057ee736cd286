#include "levelflow/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "levelflow/error.hpp"
#include "levelflow/fem/fe_values.hpp"

#ifndef LEVELFLOW_SCENARIO_DIR
#define LEVELFLOW_SCENARIO_DIR "scenarios"
#endif

namespace levelflow::cli_io {

namespace fs = std::filesystem;
using coupling::SimulationState;
using fem::FEValues;
using fem::Field;

namespace {

/// Gauss(2) points on each of n x n subcells of the reference square.
fem::QuadRule subcell_rule(int n) {
  const fem::QuadRule& g = fem::gauss(2);
  fem::QuadRule r;
  r.n_1d = n * g.n_1d;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (std::size_t q = 0; q < g.size(); ++q) {
        r.points.push_back({(i + g.points[q].x) / n, (j + g.points[q].y) / n});
        r.weights.push_back(g.weights[q] / (n * n));
      }
  return r;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

MetricsRow compute_metrics(const SimulationState& state, const ScenarioConfig& c, double dt) {
  static const fem::QuadRule fine = subcell_rule(4);
  const fem::QuadRule& coarse = fem::gauss(3);
  const Field& phi = state.ls.phi;
  const fem::FESpace& s = phi.space();
  const QuadMesh& mesh = s.mesh();
  const double sign = c.metrics_phase >= 0 ? 1.0 : -1.0;

  FEValues fe_c(s.degree(), coarse), fe_f(s.degree(), fine);
  std::optional<FEValues> fu_c, fu_f;
  std::vector<double> lp(s.dofs_per_cell()), lu;
  const bool flow = state.has_flow();
  if (flow) {
    fu_c.emplace(state.velocity_space->degree(), coarse);
    fu_f.emplace(state.velocity_space->degree(), fine);
    lu.resize(state.velocity_space->dofs_per_cell());
  }
  const auto prescribed = flow ? std::function<Vec2(const Vec2&, double)>{} : coupling::prescribed_velocity(c.flow);

  double area = 0.0, mx = 0.0, my = 0.0, mv = 0.0;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    phi.cell_values(static_cast<int>(k), lp.data());
    const auto [lo, hi] = std::minmax_element(lp.begin(), lp.end());
    const double vmin = sign * (sign > 0 ? *lo : *hi), vmax = sign * (sign > 0 ? *hi : *lo);
    if (vmax <= 0.0) continue;
    const bool cut = vmin <= 0.0;
    FEValues& fe = cut ? fe_f : fe_c;
    fe.reinit(mesh.cell(k));
    FEValues* fu = nullptr;
    if (flow) {
      fu = cut ? &*fu_f : &*fu_c;
      fu->reinit(mesh.cell(k));
      state.ns.U_n.cell_values(static_cast<int>(k), lu.data());
    }
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      if (cut && sign * fem::value_at(fe, lp.data(), q) <= 0.0) continue;
      const double w = fe.JxW(q);
      const Vec2& p = fe.point(q);
      const double uy = flow ? fem::value_at(*fu, lu.data(), q, 1) : prescribed(p, state.t).y;
      area += w;
      mx += w * p.x;
      my += w * p.y;
      mv += w * uy;
    }
  }
  MetricsRow r;
  r.t = state.t;
  r.area = area;
  r.phase_empty = area <= 0.0;
  if (!r.phase_empty) {
    r.x_c = mx / area;
    r.y_c = my / area;
    r.u_c = mv / area;
  }
  r.div_norm = flow ? nsolver::divergence_l2(state.ns.U_n) : 0.0;
  r.min_h = mesh.min_side();
  r.n_cells = static_cast<long>(mesh.size());
  r.dt = dt;
  return r;
}

double study_error(const SimulationState& state, const ScenarioConfig& c) {
  const double beta = state.ls.beta;
  if (c.study.reference == StudyConfig::Reference::initial)
    return fem::l2_error(state.ls.phi, coupling::initial_levelset(c, beta));
  const LevelSetInit ls = c.levelset;
  const Extents domain = c.domain;
  return fem::l2_error(state.ls.phi, [&](const Vec2& p) {
    return beta * std::tanh(ls.inside_sign * coupling::shape_distance(ls, domain, p) / beta);
  });
}

ConvergenceTable convergence_study(const ScenarioConfig& base, int rungs) {
  if (base.dt <= 0.0) throw ConfigError("a convergence study needs a fixed time.dt");
  if (rungs < 1) throw ConfigError("a convergence study needs at least one rung");
  ConvergenceTable table;
  for (int i = 0; i < rungs; ++i) {
    ScenarioConfig c = base;
    const double scale = std::ldexp(1.0, -i);
    c.dt = base.dt * scale;
    if (base.study.refine_mesh) c.h0 = base.h0 * scale;
    SimulationState s = coupling::initialize(c);
    const long steps = std::lround(c.t_final / c.dt);
    for (long n = 0; n < steps; ++n) s = coupling::advance(s, c, c.t_final - s.t);
    ConvergenceRow row;
    row.dt = c.dt;
    row.h = s.mesh->min_side();
    row.error = study_error(s, c);
    row.rate = table.empty() ? std::numeric_limits<double>::quiet_NaN() : std::log2(table.back().error / row.error);
    table.push_back(row);
  }
  return table;
}

void write_vtk(const SimulationState& state, const ScenarioConfig& c, const coupling::StepInfo* info,
               const fs::path& path) {
  const fem::FESpace& s = *state.phi_space;
  const QuadMesh& mesh = s.mesh();
  const int n = s.n_nodes();
  const std::size_t nc = mesh.size();
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n" << c.name << " t=" << fmt17(state.t) << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (int i = 0; i < n; ++i) {
    const Vec2 p = s.node_point(i);
    out << fmt17(p.x) << ' ' << fmt17(p.y) << " 0\n";
  }
  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (std::size_t k = 0; k < nc; ++k) {
    const auto nodes = s.cell_nodes(static_cast<int>(k));
    out << "4 " << nodes[0] << ' ' << nodes[1] << ' ' << nodes[3] << ' ' << nodes[2] << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t k = 0; k < nc; ++k) out << "9\n";

  out << "POINT_DATA " << n << "\nSCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) out << fmt17(state.ls.phi[i]) << '\n';
  if (state.has_flow()) {
    const fem::FESpace& vs = *state.velocity_space;
    const fem::FESpace& ps = *state.pressure_space;
    out << "VECTORS velocity double\n";
    for (int i = 0; i < n; ++i) {
      const int v = vs.find_node(s.node_key(i));
      out << fmt17(state.ns.U_n[2 * v]) << ' ' << fmt17(state.ns.U_n[2 * v + 1]) << " 0\n";
    }
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) out << fmt17(state.ns.P_n[ps.find_node(s.node_key(i))]) << '\n';
  }

  const coupling::MaterialFields mat = coupling::blend(state.ls.phi, c.phys, state.ls.beta, c.num.c_h,
                                                       state.has_flow() ? &state.ns.U_n : nullptr);
  auto cell_avg = [&](const std::vector<double>& v, std::size_t k) {
    double sum = 0.0;
    for (int q = 0; q < mat.points_per_cell; ++q) sum += v[k * mat.points_per_cell + q];
    return sum / mat.points_per_cell;
  };
  auto scalars = [&](const char* name, const std::function<double(std::size_t)>& f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t k = 0; k < nc; ++k) out << fmt17(f(k)) << '\n';
  };
  const bool have_visc = info && info->viscosities.mu_stab.size() == nc;
  out << "CELL_DATA " << nc << '\n';
  scalars("mu_stab", [&](std::size_t k) { return have_visc ? info->viscosities.mu_stab[k] : 0.0; });
  scalars("mu_lin", [&](std::size_t k) { return have_visc ? info->viscosities.mu_lin[k] : 0.0; });
  scalars("mu_ent", [&](std::size_t k) { return have_visc ? info->viscosities.mu_ent[k] : 0.0; });
  scalars("rho", [&](std::size_t k) { return cell_avg(mat.rho, k); });
  scalars("mu", [&](std::size_t k) { return cell_avg(mat.mu, k); });
  scalars("generation", [&](std::size_t k) { return mesh.cell(k).level; });
  check_written(out, path);
}

std::string csv_header() { return "t,x_c,y_c,u_c,area,div_norm,min_h,n_cells,dt,phase_empty"; }

void write_csv(const std::vector<MetricsRow>& rows, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << csv_header() << '\n';
  for (const MetricsRow& r : rows)
    out << fmt17(r.t) << ',' << fmt17(r.x_c) << ',' << fmt17(r.y_c) << ',' << fmt17(r.u_c) << ','
        << fmt17(r.area) << ',' << fmt17(r.div_norm) << ',' << fmt17(r.min_h) << ',' << r.n_cells << ','
        << fmt17(r.dt) << ',' << (r.phase_empty ? 1 : 0) << '\n';
  check_written(out, path);
}

std::vector<MetricsRow> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw IoError("unexpected CSV header in " + path.string());
  std::vector<MetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 10 fields");
    auto num = [&](int i) { return std::strtod(f[i].c_str(), nullptr); };
    MetricsRow r;
    r.t = num(0);
    r.x_c = num(1);
    r.y_c = num(2);
    r.u_c = num(3);
    r.area = num(4);
    r.div_norm = num(5);
    r.min_h = num(6);
    r.n_cells = std::stol(f[7]);
    r.dt = num(8);
    r.phase_empty = f[9] == "1";
    rows.push_back(r);
  }
  return rows;
}

void write_convergence_csv(const ConvergenceTable& table, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "dt,h,error,rate\n";
  for (const auto& r : table)
    out << fmt17(r.dt) << ',' << fmt17(r.h) << ',' << fmt17(r.error) << ',' << fmt17(r.rate) << '\n';
  check_written(out, path);
}

RunResult run(const ScenarioConfig& c, const StepObserver& observer) {
  RunResult r;
  const bool write = !c.output_dir.empty();
  const fs::path dir = c.output_dir;
  auto snapshot = [&](const SimulationState& s, const coupling::StepInfo* info, const std::string& tag) {
    if (write) write_vtk(s, c, info, dir / (c.name + "_" + tag + ".vtk"));
  };
  auto step_tag = [](long step) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06ld", step);
    return std::string(buf);
  };

  SimulationState state;
  try {
    state = coupling::initialize(c);
  } catch (const ConfigError& e) {
    r.status = kExitConfig;
    r.message = e.what();
    return r;
  } catch (const std::runtime_error& e) {
    r.status = kExitSolver;
    r.message = std::string("initialization: ") + e.what();
    return r;
  }
  r.rows.push_back(compute_metrics(state, c));
  if (c.output_every > 0) snapshot(state, nullptr, step_tag(0));

  coupling::StepInfo info;
  const double t_end = c.t_final * (1.0 - 1e-12);
  while (state.t < t_end) {
    try {
      SimulationState next = coupling::advance(state, c, c.t_final - state.t, &info);
      state = std::move(next);
    } catch (const std::runtime_error& e) {
      r.status = kExitSolver;
      r.message = "step " + std::to_string(state.step + 1) + " at t=" + fmt17(state.t) + ": " + e.what();
      if (write) {
        snapshot(state, nullptr, "last_good");
        write_csv(r.rows, dir / "metrics.csv");
      }
      r.final_state = std::move(state);
      return r;
    }
    r.rows.push_back(compute_metrics(state, c, info.dt));
    if (observer) observer(state, info);
    if (c.output_every > 0 && state.step % c.output_every == 0) snapshot(state, &info, step_tag(state.step));
  }
  if (write) {
    snapshot(state, &info, "final");
    write_csv(r.rows, dir / "metrics.csv");
  }
  r.final_state = std::move(state);
  return r;
}

fs::path scenario_dir() { return LEVELFLOW_SCENARIO_DIR; }

std::vector<std::string> builtin_scenarios() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(scenario_dir(), ec))
    if (e.path().extension() == ".cfg") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

ScenarioConfig load_scenario(const std::string& path_or_name) {
  fs::path p = path_or_name;
  if (!fs::exists(p)) {
    const fs::path builtin = scenario_dir() / (path_or_name + ".cfg");
    if (!fs::exists(builtin)) throw IoError("no scenario file or built-in scenario named " + path_or_name);
    p = builtin;
  }
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace levelflow::cli_io
