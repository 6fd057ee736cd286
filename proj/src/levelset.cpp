#include "levelflow/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levelflow/fem/solvers.hpp"

namespace levelflow::levelset {

using fem::Field;
using fem::FESpace;
using fem::FEValues;

VelocityField VelocityField::from_field(const Field& u) {
  VelocityField v;
  v.field_ = &u;
  return v;
}

VelocityField VelocityField::from_function(std::function<Vec2(const Vec2&)> f) {
  VelocityField v;
  v.fn_ = std::move(f);
  return v;
}

void VelocityField::on_cell(int cell, const FEValues& fe, std::vector<Vec2>& out) const {
  out.resize(fe.n_points());
  if (!field_) {
    for (std::size_t q = 0; q < fe.n_points(); ++q) out[q] = fn_(fe.point(q));
    return;
  }
  const FESpace& s = field_->space();
  if (!fe_u_ || fe_u_->n_points() != fe.n_points() || fe_u_->n_shape() != s.nodes_per_cell()) {
    std::vector<Vec2> refs(fe.n_points());
    for (std::size_t q = 0; q < fe.n_points(); ++q) refs[q] = fe.ref_point(q);
    fe_u_ = std::make_shared<FEValues>(s.degree(), refs);
  }
  for (std::size_t q = 0; q < fe.n_points(); ++q)
    if (!(fe_u_->ref_point(q) == fe.ref_point(q))) {
      std::vector<Vec2> refs(fe.n_points());
      for (std::size_t r = 0; r < fe.n_points(); ++r) refs[r] = fe.ref_point(r);
      fe_u_ = std::make_shared<FEValues>(s.degree(), refs);
      break;
    }
  local_.resize(s.dofs_per_cell());
  field_->cell_values(cell, local_.data());
  for (std::size_t q = 0; q < fe.n_points(); ++q) out[q] = fem::vector_at(*fe_u_, local_.data(), q);
}

double VelocityField::max_norm(const FESpace& probe) const {
  double m = 0.0;
  if (field_) {
    const auto& v = field_->values();
    for (Eigen::Index n = 0; n + 1 < v.size(); n += 2) m = std::max(m, std::hypot(v[n], v[n + 1]));
    return m;
  }
  for (int n = 0; n < probe.n_nodes(); ++n) m = std::max(m, norm(fn_(probe.node_point(n))));
  return m;
}

int sign_h(double s, double beta, double c_s) {
  const double cut = beta * std::tanh(c_s);
  if (s > cut) return 1;
  if (s < -cut) return -1;
  return 0;
}

double compute_lambda(double u_max, double c_lambda) { return c_lambda * u_max; }

double transport_rhs(double phi, const Vec2& grad_phi, const Vec2& u, double lambda, double beta, double c_s) {
  double L = -dot(u, grad_phi);
  if (lambda != 0.0) L += lambda * sign_h(phi, beta, c_s) * (reinit_g(phi, beta) - norm(grad_phi));
  return L;
}

namespace {

const fem::QuadRule& transport_rule() { return fem::gauss(3); }

double entropy(double phi, double p) { return std::pow(std::abs(phi), p); }
double entropy_derivative(double phi, double p) {
  if (phi == 0.0) return 0.0;
  return p * std::pow(std::abs(phi), p - 1.0) * (phi > 0 ? 1.0 : -1.0);
}

/// Unit direction of grad(phi) scaled by lambda sign_h(phi); zero where the gradient vanishes.
Vec2 reinit_speed(double phi, const Vec2& g, double lambda, double beta, double c_s) {
  const double n = norm(g);
  if (lambda == 0.0 || n == 0.0) return {};
  return (lambda * sign_h(phi, beta, c_s) / n) * g;
}

/// ||E(phi) - mean E(phi)||_inf over the quadrature points of all cells.
double entropy_normalization(const Field& phi, double p) {
  const FESpace& s = phi.space();
  FEValues fe(s.degree(), transport_rule());
  std::vector<double> local(s.dofs_per_cell());
  std::vector<double> values;
  values.reserve(s.mesh().size() * fe.n_points());
  double integral = 0.0, area = 0.0;
  for (std::size_t k = 0; k < s.mesh().size(); ++k) {
    fe.reinit(s.mesh().cell(k));
    phi.cell_values(static_cast<int>(k), local.data());
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double e = entropy(fem::value_at(fe, local.data(), q), p);
      values.push_back(e);
      integral += e * fe.JxW(q);
      area += fe.JxW(q);
    }
  }
  const double mean = integral / area;
  double m = 0.0;
  for (double e : values) m = std::max(m, std::abs(e - mean));
  return m;
}

}  // namespace

std::vector<double> entropy_residual(const Field& phi_stage, const Field& phi_n, double dt_eff,
                                     const VelocityField& u, double lambda, double beta,
                                     const NumericalParams& params) {
  const FESpace& s = phi_stage.space();
  const double p = params.entropy_p;
  FEValues fe(s.degree(), transport_rule());
  std::vector<double> ls(s.dofs_per_cell()), ln(s.dofs_per_cell());
  std::vector<Vec2> uq;
  std::vector<double> out(s.mesh().size(), 0.0);
  for (std::size_t k = 0; k < s.mesh().size(); ++k) {
    fe.reinit(s.mesh().cell(k));
    phi_stage.cell_values(static_cast<int>(k), ls.data());
    phi_n.cell_values(static_cast<int>(k), ln.data());
    u.on_cell(static_cast<int>(k), fe, uq);
    double r_max = 0.0;
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double ph = fem::value_at(fe, ls.data(), q);
      const double ph_n = fem::value_at(fe, ln.data(), q);
      const Vec2 g = fem::grad_at(fe, ls.data(), q);
      double reinit = 0.0;
      if (lambda != 0.0) reinit = lambda * sign_h(ph, beta, params.c_s) * (reinit_g(ph, beta) - norm(g));
      const double r = (entropy(ph, p) - entropy(ph_n, p)) / dt_eff +
                       (dot(uq[q], g) - reinit) * entropy_derivative(ph, p);
      r_max = std::max(r_max, std::abs(r));
    }
    out[k] = r_max;
  }
  return out;
}

StabilizationField viscosities(const Field& phi_stage, const Field& phi_n, double dt_eff, const VelocityField& u,
                               double lambda, double beta, const NumericalParams& params) {
  const FESpace& s = phi_stage.space();
  const std::size_t nc = s.mesh().size();
  StabilizationField out;
  out.mu_lin.assign(nc, 0.0);
  out.mu_ent.assign(nc, 0.0);
  out.mu_stab.assign(nc, 0.0);
  if (params.c_lin == 0.0) return out;

  FEValues fe(s.degree(), transport_rule());
  std::vector<double> ls(s.dofs_per_cell());
  std::vector<Vec2> uq;
  for (std::size_t k = 0; k < nc; ++k) {
    const Cell& cell = s.mesh().cell(k);
    fe.reinit(cell);
    phi_stage.cell_values(static_cast<int>(k), ls.data());
    u.on_cell(static_cast<int>(k), fe, uq);
    double w = 0.0;
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double ph = fem::value_at(fe, ls.data(), q);
      const Vec2 g = fem::grad_at(fe, ls.data(), q);
      w = std::max(w, norm(uq[q] + reinit_speed(ph, g, lambda, beta, params.c_s)));
    }
    out.mu_lin[k] = params.c_lin * cell.diameter() * w;
  }

  const auto residual = entropy_residual(phi_stage, phi_n, dt_eff, u, lambda, beta, params);
  const double norm_e = entropy_normalization(phi_stage, params.entropy_p);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nc; ++k) {
    const double h = s.mesh().cell(k).diameter();
    if (residual[k] == 0.0)
      out.mu_ent[k] = 0.0;
    else if (norm_e == 0.0)
      out.mu_ent[k] = inf;
    else
      out.mu_ent[k] = params.c_ent * h * h * residual[k] / norm_e;
    out.mu_stab[k] = std::min(out.mu_lin[k], out.mu_ent[k]);
  }
  return out;
}

const fem::SparseMatrix& MassCache::get(const FESpace& s) {
  if (space != &s) {
    mass = fem::mass_matrix(s);
    space = &s;
  }
  return mass;
}

namespace {

/// Reduced vector of int L(phi,u) W - int mu grad(phi) . grad(W).
Eigen::VectorXd stage_rhs(const Field& phi, const VelocityField& u, double lambda, double beta, double c_s,
                          const std::vector<double>* mu) {
  const FESpace& s = phi.space();
  Eigen::VectorXd b;
  std::vector<double> local(s.dofs_per_cell());
  std::vector<Vec2> uq;
  fem::assemble(
      s, transport_rule(),
      [&](int cell, const FEValues& fe, double*, double* fl) {
        phi.cell_values(cell, local.data());
        u.on_cell(cell, fe, uq);
        const double m = mu ? (*mu)[cell] : 0.0;
        const int n = fe.n_shape();
        for (std::size_t q = 0; q < fe.n_points(); ++q) {
          const double ph = fem::value_at(fe, local.data(), q);
          const Vec2 g = fem::grad_at(fe, local.data(), q);
          const double L = transport_rhs(ph, g, uq[q], lambda, beta, c_s) * fe.JxW(q);
          const Vec2 flux = (m * fe.JxW(q)) * g;
          for (int a = 0; a < n; ++a) fl[a] += L * fe.shape(q, a) - dot(flux, fe.grad(q, a));
        }
      },
      nullptr, &b);
  return b;
}

}  // namespace

LevelSetState ssprk3_step(const LevelSetState& state, const VelocityField& u_n, const VelocityField& u_half,
                          const VelocityField& u_np1, double t, double dt, const NumericalParams& params,
                          const InflowData& inflow, MassCache* cache, StepDiagnostics* diagnostics) {
  const Field& phi_n = state.phi;
  const FESpace& s = phi_n.space();
  MassCache local_cache;
  const auto& M = (cache ? cache : &local_cache)->get(s);
  const double tol = params.lin_solver_rel_tol;
  const int max_iter = params.lin_solver_max_iter;
  const double lambda = state.lambda;
  const double beta = state.beta;
  long iterations = 0;

  auto increment = [&](const Field& phi, const VelocityField& u, const std::vector<double>* mu) {
    const Eigen::VectorXd b = stage_rhs(phi, u, lambda, beta, params.c_s, mu);
    fem::SolveStats stats;
    const Eigen::VectorXd x = fem::solve_spd(M, b, tol, max_iter, nullptr, &stats);
    iterations += stats.iterations;
    return fem::expand(s, x);
  };

  // Stages written as increments of phi_n: phi1 = phi_n + dt k1,
  // phi2 = 3/4 phi_n + 1/4 (phi1 + dt k2), phi3 = 1/3 phi_n + 2/3 (phi2 + dt k3).
  const Eigen::VectorXd k1 = increment(phi_n, u_n, nullptr);
  const Field phi1(phi_n.space_ptr(), phi_n.values() + dt * k1);

  auto visc2 = viscosities(phi1, phi_n, dt, u_np1, lambda, beta, params);
  const Eigen::VectorXd k2 = increment(phi1, u_np1, &visc2.mu_stab);
  const Field phi2(phi_n.space_ptr(), phi_n.values() + (0.25 * dt) * (k1 + k2));

  auto visc3 = viscosities(phi2, phi_n, 0.5 * dt, u_half, lambda, beta, params);
  const Eigen::VectorXd k3 = increment(phi2, u_half, &visc3.mu_stab);
  Field phi3(phi_n.space_ptr(), phi_n.values() + dt * ((k1 + k2) / 6.0 + (2.0 / 3.0) * k3));

  if (inflow) {
    for (int n = 0; n < s.n_nodes(); ++n) {
      if (s.node_sides(n) == 0) continue;
      if (auto v = inflow(s.node_point(n), t + dt)) phi3[n] = *v;
    }
    phi3.distribute();
  }
  if (diagnostics) {
    diagnostics->stage2 = std::move(visc2);
    diagnostics->stage3 = std::move(visc3);
    diagnostics->solver_iterations = iterations;
  }
  return {std::move(phi3), beta, lambda};
}

double cfl_dt(const Field& phi, const VelocityField& u, double lambda, double beta, double c_cfl, double c_s,
              double dt_max) {
  const FESpace& s = phi.space();
  FEValues fe(s.degree(), transport_rule());
  std::vector<double> local(s.dofs_per_cell());
  std::vector<Vec2> uq;
  double dt = dt_max;
  for (std::size_t k = 0; k < s.mesh().size(); ++k) {
    const Cell& cell = s.mesh().cell(k);
    fe.reinit(cell);
    phi.cell_values(static_cast<int>(k), local.data());
    u.on_cell(static_cast<int>(k), fe, uq);
    double w = 0.0;
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double ph = fem::value_at(fe, local.data(), q);
      const Vec2 g = fem::grad_at(fe, local.data(), q);
      w = std::max(w, norm(uq[q] + reinit_speed(ph, g, lambda, beta, c_s)));
    }
    if (w > 0.0) dt = std::min(dt, c_cfl * cell.diameter() / w);
  }
  return dt;
}

}  // namespace levelflow::levelset
