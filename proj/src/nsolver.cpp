#include "levelflow/nsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levelflow/error.hpp"
#include "levelflow/fem/solvers.hpp"

namespace levelflow::nsolver {

using fem::Field;
using fem::FESpace;
using fem::FEValues;

StepCoefficients bdf2_coeffs(double dt_np1, double dt_n) {
  StepCoefficients c;
  const double eta = dt_np1 / dt_n;
  c.dt = dt_np1;
  c.eta = eta;
  c.a0 = (1.0 + 2.0 * eta) / ((1.0 + eta) * dt_np1);
  c.a1 = -(1.0 + eta) / dt_np1;
  c.a2 = eta * eta / ((1.0 + eta) * dt_np1);
  c.ext_n = 1.0 + eta;
  c.ext_nm1 = -eta;
  return c;
}

StepCoefficients backward_euler_coeffs(double dt) {
  StepCoefficients c;
  c.dt = dt;
  c.a0 = 1.0 / dt;
  c.a1 = -1.0 / dt;
  return c;
}

NSState zero_state(std::shared_ptr<const FESpace> velocity, std::shared_ptr<const FESpace> pressure) {
  NSState s;
  s.U_n = Field(velocity);
  s.U_nm1 = Field(velocity);
  s.P_n = Field(pressure);
  s.Psi_n = Field(pressure);
  s.Psi_nm1 = Field(pressure);
  return s;
}

Field extrapolate(const NSState& state, const StepCoefficients& c) {
  return Field(state.U_n.space_ptr(), c.ext_n * state.U_n.values() + c.ext_nm1 * state.U_nm1.values());
}

namespace {

const fem::QuadRule& ns_rule() { return fem::gauss(3); }

void check_same_mesh(const FESpace& a, const FESpace& b) {
  if (&a.mesh() != &b.mesh() && !(a.mesh().cells().size() == b.mesh().cells().size() && a.mesh().same_roots(b.mesh())))
    throw MeshError("velocity and pressure spaces live on different meshes");
}

constexpr double kGauss3[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGauss3W[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

/// Reference points and side of each domain-boundary edge of a cell.
std::vector<std::pair<Side, std::vector<Vec2>>> boundary_edges(const QuadMesh& mesh, const Cell& cell) {
  std::vector<std::pair<Side, std::vector<Vec2>>> out;
  const std::int64_t nx = static_cast<std::int64_t>(mesh.roots_x()) << cell.level;
  const std::int64_t ny = static_cast<std::int64_t>(mesh.roots_y()) << cell.level;
  auto edge = [&](Side s, auto point) {
    std::vector<Vec2> pts;
    for (double t : kGauss3) pts.push_back(point(t));
    out.emplace_back(s, std::move(pts));
  };
  if (cell.i == 0) edge(Side::left, [](double t) { return Vec2{0.0, t}; });
  if (cell.i + 1 == nx) edge(Side::right, [](double t) { return Vec2{1.0, t}; });
  if (cell.j == 0) edge(Side::bottom, [](double t) { return Vec2{t, 0.0}; });
  if (cell.j + 1 == ny) edge(Side::top, [](double t) { return Vec2{t, 1.0}; });
  return out;
}

}  // namespace

Field velocity_prediction(const NSState& state, const StepCoefficients& c, const PredictionData& data,
                          SolveReport* report) {
  const auto& vspace_ptr = state.U_n.space_ptr();
  const FESpace& vs = *vspace_ptr;
  const FESpace& ps = state.P_n.space();
  check_same_mesh(vs, ps);
  const QuadMesh& mesh = vs.mesh();

  const Field U_star = extrapolate(state, c);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(vs.n_dofs());
  if (data.dirichlet)
    for (int dof : vs.dirichlet_dofs()) {
      const Vec2 v = data.dirichlet(vs.node_point(dof / 2));
      g[dof] = dof % 2 == 0 ? v.x : v.y;
    }

  FEValues fe_p(ps.degree(), ns_rule());
  const int npc = vs.nodes_per_cell();
  const std::size_t nq = ns_rule().points.size();
  std::vector<double> un(vs.dofs_per_cell()), unm1(vs.dofs_per_cell()), ust(vs.dofs_per_cell());
  std::vector<double> pn(ps.dofs_per_cell()), psin(ps.dofs_per_cell()), psinm1(ps.dofs_per_cell());
  std::vector<double> rho(nq), mu(nq);
  std::vector<InterfacePoint> ip(nq);
  std::vector<Vec2> pg(npc);

  fem::SparseMatrix A = fem::make_matrix(vs);
  Eigen::VectorXd b;
  auto kernel = [&](int cell, const FEValues& fe, double* Ke, double* fl) {
    const Cell& K = mesh.cell(cell);
    fe_p.reinit(K);
    state.U_n.cell_values(cell, un.data());
    state.U_nm1.cell_values(cell, unm1.data());
    U_star.cell_values(cell, ust.data());
    state.P_n.cell_values(cell, pn.data());
    state.Psi_n.cell_values(cell, psin.data());
    state.Psi_nm1.cell_values(cell, psinm1.data());
    data.material(cell, fe, rho.data(), mu.data());
    std::fill(ip.begin(), ip.end(), InterfacePoint{});
    if (data.interface) data.interface(cell, fe, ip.data());

    double w_max = 0.0;
    for (std::size_t q = 0; q < nq; ++q) w_max = std::max(w_max, norm(fem::vector_at(fe, ust.data(), q)));
    const double hw = K.diameter() * w_max;

    const int nd = vs.dofs_per_cell();
    for (std::size_t q = 0; q < nq; ++q) {
      const double jxw = fe.JxW(q);
      const double r = rho[q], m = mu[q];
      const double tau = data.c_stab * (m + r * hw);
      const double wt = ip[q].weight;
      const Tensor2& P = ip[q].projector;
      for (int a = 0; a < npc; ++a) {
        const Vec2& ga = fe.grad(q, a);
        pg[a] = {P.xx * ga.x + P.xy * ga.y, P.yx * ga.x + P.yy * ga.y};
      }

      const Vec2 u_hist = c.a1 * fem::vector_at(fe, un.data(), q) + c.a2 * fem::vector_at(fe, unm1.data(), q);
      const Vec2 w = fem::vector_at(fe, ust.data(), q);
      const Tensor2 G = fem::vector_grad_at(fe, un.data(), q);
      const Vec2 adv{G.xx * w.x + G.xy * w.y, G.yx * w.x + G.yy * w.y};
      const double p_tilde = fem::value_at(fe_p, pn.data(), q) + (4.0 / 3.0) * fem::value_at(fe_p, psin.data(), q) -
                             (1.0 / 3.0) * fem::value_at(fe_p, psinm1.data(), q);
      Vec2 f = r * data.gravity - r * u_hist;
      if (data.advection) f -= r * adv;
      if (data.force) f += data.force(fe.point(q));

      for (int ci = 0; ci < 2; ++ci) {
        const double fc = ci == 0 ? f.x : f.y;
        const double Pc_x = ci == 0 ? P.xx : P.yx, Pc_y = ci == 0 ? P.xy : P.yy;
        for (int a = 0; a < npc; ++a) {
          const Vec2& ga = fe.grad(q, a);
          const double dca = ci == 0 ? ga.x : ga.y;
          fl[ci * npc + a] += jxw * (fc * fe.shape(q, a) + p_tilde * dca - wt * (Pc_x * ga.x + Pc_y * ga.y));
        }
      }

      for (int ci = 0; ci < 2; ++ci)
        for (int a = 0; a < npc; ++a) {
          const Vec2& ga = fe.grad(q, a);
          const double dca = ci == 0 ? ga.x : ga.y;
          const double phia = fe.shape(q, a);
          double* row = Ke + static_cast<std::size_t>(ci * npc + a) * nd;
          for (int di = 0; di < 2; ++di)
            for (int bb = 0; bb < npc; ++bb) {
              const Vec2& gb = fe.grad(q, bb);
              const double ddb = di == 0 ? gb.x : gb.y;
              const double dda = di == 0 ? ga.x : ga.y;
              const double dcb = ci == 0 ? gb.x : gb.y;
              double v = m * dda * dcb + tau * dca * ddb;
              if (ci == di) v += r * c.a0 * phia * fe.shape(q, bb) + m * dot(ga, gb) + c.dt * wt * dot(pg[a], pg[bb]);
              row[di * npc + bb] += jxw * v;
            }
        }
    }

    if (data.neumann) {
      for (const auto& [side, refs] : boundary_edges(mesh, K)) {
        FEValues fe_e(vs.degree(), refs);
        fe_e.reinit(K);
        const double len = (side == Side::left || side == Side::right) ? K.hy() : K.hx();
        for (std::size_t q = 0; q < refs.size(); ++q) {
          const Vec2 t = data.neumann(fe_e.point(q), side);
          for (int a = 0; a < npc; ++a) {
            const double s = len * kGauss3W[q] * fe_e.shape(q, a);
            fl[a] += s * t.x;
            fl[npc + a] += s * t.y;
          }
        }
      }
    }
  };
  fem::assemble(vs, ns_rule(), kernel, &A, &b, &g);

  fem::SolveStats stats;
  const Eigen::VectorXd guess = fem::restrict_to_free(vs, U_star.values());
  const Eigen::VectorXd x = fem::solve_spd(A, b, data.tol, data.max_iter, &guess, &stats);
  if (report) report->velocity_iterations = stats.iterations;
  return Field(vspace_ptr, fem::expand(vs, x, &g));
}

namespace {

/// Reduced vector of int div(U) Q over the pressure space.
Eigen::VectorXd divergence_rhs(const Field& U, const FESpace& ps) {
  const FESpace& vs = U.space();
  check_same_mesh(vs, ps);
  FEValues fe_u(vs.degree(), ns_rule());
  std::vector<double> lu(vs.dofs_per_cell());
  Eigen::VectorXd b;
  fem::assemble(
      ps, ns_rule(),
      [&](int cell, const FEValues& fe, double*, double* fl) {
        fe_u.reinit(vs.mesh().cell(cell));
        U.cell_values(cell, lu.data());
        for (std::size_t q = 0; q < fe.n_points(); ++q) {
          const double d = trace(fem::vector_grad_at(fe_u, lu.data(), q)) * fe.JxW(q);
          for (int a = 0; a < fe.n_shape(); ++a) fl[a] += d * fe.shape(q, a);
        }
      },
      nullptr, &b);
  return b;
}

}  // namespace

Field pressure_correction(const Field& U_np1, std::shared_ptr<const FESpace> pressure, double rho_min, double dt_np1,
                          double tol, int max_iter, SolveReport* report) {
  const FESpace& ps = *pressure;
  const fem::SparseMatrix K = fem::stiffness_matrix(ps);
  const Eigen::VectorXd b = (-1.5 * rho_min / dt_np1) * divergence_rhs(U_np1, ps);
  const Eigen::VectorXd w = fem::mass_matrix(ps) * Eigen::VectorXd::Ones(ps.n_free());
  fem::SolveStats stats;
  const Eigen::VectorXd x = fem::solve_spd(K, b, tol, max_iter, nullptr, &stats, &w);
  if (report) report->correction_iterations = stats.iterations;
  return Field(pressure, fem::expand(ps, x));
}

Field pressure_update(const Field& P_n, const Field& Psi_np1, const Field& U_np1, double mu_min, double tol,
                      int max_iter, SolveReport* report) {
  const auto& pressure = P_n.space_ptr();
  const FESpace& ps = *pressure;
  const fem::SparseMatrix M = fem::mass_matrix(ps);
  const Eigen::VectorXd sum = fem::restrict_to_free(ps, P_n.values() + Psi_np1.values());
  const Eigen::VectorXd b = M * sum - mu_min * divergence_rhs(U_np1, ps);
  fem::SolveStats stats;
  const Eigen::VectorXd x = fem::solve_spd(M, b, tol, max_iter, &sum, &stats);
  if (report) report->update_iterations = stats.iterations;
  return Field(pressure, fem::expand(ps, x));
}

Field initial_pressure(std::shared_ptr<const FESpace> pressure, const MaterialFn& material, const Vec2& gravity,
                       double tol, int max_iter) {
  const FESpace& ps = *pressure;
  const std::size_t nq = ns_rule().points.size();
  std::vector<double> rho(nq), mu(nq);
  Eigen::VectorXd b;
  fem::assemble(
      ps, ns_rule(),
      [&](int cell, const FEValues& fe, double*, double* fl) {
        material(cell, fe, rho.data(), mu.data());
        for (std::size_t q = 0; q < nq; ++q) {
          const double s = rho[q] * fe.JxW(q);
          for (int a = 0; a < fe.n_shape(); ++a) fl[a] += s * dot(gravity, fe.grad(q, a));
        }
      },
      nullptr, &b);
  const fem::SparseMatrix K = fem::stiffness_matrix(ps);
  const Eigen::VectorXd w = fem::mass_matrix(ps) * Eigen::VectorXd::Ones(ps.n_free());
  const Eigen::VectorXd x = fem::solve_spd(K, b, tol, max_iter, nullptr, nullptr, &w);
  return Field(pressure, fem::expand(ps, x));
}

NSState step(const NSState& state, double dt_np1, const PredictionData& data, double rho_min, double mu_min,
             SolveReport* report) {
  const StepCoefficients c = state.steps == 0 ? backward_euler_coeffs(dt_np1) : bdf2_coeffs(dt_np1, state.dt_n);
  NSState next;
  next.U_n = velocity_prediction(state, c, data, report);
  next.Psi_n = pressure_correction(next.U_n, state.P_n.space_ptr(), rho_min, dt_np1, data.tol, data.max_iter, report);
  next.P_n = pressure_update(state.P_n, next.Psi_n, next.U_n, mu_min, data.tol, data.max_iter, report);
  next.U_nm1 = state.U_n;
  next.Psi_nm1 = state.Psi_n;
  next.dt_n = dt_np1;
  next.steps = state.steps + 1;
  return next;
}

double cfl_dt_ns(const Field& U, const QuadMesh& mesh, double c_cfl, double dt_max) {
  const auto& v = U.values();
  double m = 0.0;
  for (Eigen::Index n = 0; n + 1 < v.size(); n += 2) m = std::max(m, std::hypot(v[n], v[n + 1]));
  if (m == 0.0) return dt_max;
  return std::min(dt_max, c_cfl * 0.5 * mesh.min_side() / m);
}

double divergence_l2(const Field& U) {
  const FESpace& vs = U.space();
  FEValues fe(vs.degree(), fem::gauss(vs.degree() + 2));
  std::vector<double> lu(vs.dofs_per_cell());
  double s = 0.0;
  for (std::size_t k = 0; k < vs.mesh().size(); ++k) {
    fe.reinit(vs.mesh().cell(k));
    U.cell_values(static_cast<int>(k), lu.data());
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double d = trace(fem::vector_grad_at(fe, lu.data(), q));
      s += d * d * fe.JxW(q);
    }
  }
  return std::sqrt(s);
}

fem::SparseMatrix grad_div_matrix(const Field& advecting, double rho, double mu, double c_stab) {
  const FESpace& vs = advecting.space();
  fem::SparseMatrix A = fem::make_matrix(vs);
  std::vector<double> lw(vs.dofs_per_cell());
  const int npc = vs.nodes_per_cell(), nd = vs.dofs_per_cell();
  fem::assemble(
      vs, ns_rule(),
      [&](int cell, const FEValues& fe, double* Ke, double*) {
        advecting.cell_values(cell, lw.data());
        double w_max = 0.0;
        for (std::size_t q = 0; q < fe.n_points(); ++q) w_max = std::max(w_max, norm(fem::vector_at(fe, lw.data(), q)));
        const double tau = c_stab * (mu + rho * vs.mesh().cell(cell).diameter() * w_max);
        for (std::size_t q = 0; q < fe.n_points(); ++q)
          for (int i = 0; i < nd; ++i) {
            const Vec2& gi = fe.grad(q, i % npc);
            const double di = i < npc ? gi.x : gi.y;
            for (int j = 0; j < nd; ++j) {
              const Vec2& gj = fe.grad(q, j % npc);
              Ke[i * nd + j] += fe.JxW(q) * tau * di * (j < npc ? gj.x : gj.y);
            }
          }
      },
      &A, nullptr);
  return A;
}

}  // namespace levelflow::nsolver
