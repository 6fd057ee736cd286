#include "levelflow/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "levelflow/error.hpp"
#include "levelflow/fem/transfer.hpp"

namespace levelflow::coupling {

using fem::Field;
using fem::FESpace;
using fem::FEValues;

double heaviside_h(double s, double beta, double c_h) {
  const double w = beta * std::tanh(c_h);
  if (s > w) return 1.0;
  if (s < -w) return -1.0;
  return s / w;
}

double cross_viscosity(double gamma, const ViscosityModel& m) {
  if (m.kind == ViscosityModel::Kind::constant) return m.mu;
  return m.mu_inf + (m.mu_0 - m.mu_inf) / (1.0 + std::pow(gamma / m.gamma_c, m.exponent_n));
}

double shear_rate(const Tensor2& grad_u) { return frobenius(symmetric_part(grad_u)); }

double dirac_eps(double phi, const Vec2& grad_phi, double epsilon) {
  const double n2 = norm(grad_phi);
  if (n2 < 1e-12) return 0.0;
  const double eps = epsilon * norm_l1(grad_phi) / n2;
  const double a = std::abs(phi);
  if (a >= eps) return 0.0;
  return (1.0 - a / eps) * n2 / eps;
}

Tensor2 tangential_projector(const Vec2& g) {
  const double n2 = dot(g, g);
  if (std::sqrt(n2) < 1e-12) return {1.0, 0.0, 0.0, 1.0};
  return {1.0 - g.x * g.x / n2, -g.x * g.y / n2, -g.y * g.x / n2, 1.0 - g.y * g.y / n2};
}

namespace {

const fem::QuadRule& point_rule() { return fem::gauss(3); }

double min_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }
double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

void check_points(const FEValues& fe, int expected) {
  if (static_cast<int>(fe.n_points()) != expected)
    throw MeshError("coefficient fields were sampled with a different quadrature rule");
}

}  // namespace

double MaterialFields::rho_min() const { return min_of(rho); }
double MaterialFields::rho_max() const { return max_of(rho); }
double MaterialFields::mu_min() const { return min_of(mu); }
double MaterialFields::mu_max() const { return max_of(mu); }

nsolver::MaterialFn MaterialFields::as_function() const {
  return [this](int cell, const FEValues& fe, double* r, double* m) {
    check_points(fe, points_per_cell);
    const std::size_t base = static_cast<std::size_t>(cell) * points_per_cell;
    std::copy_n(rho.begin() + base, points_per_cell, r);
    std::copy_n(mu.begin() + base, points_per_cell, m);
  };
}

MaterialFields blend(const Field& phi, const PhysicalParams& phys, double beta, double c_h, const Field* velocity) {
  const FESpace& s = phi.space();
  const QuadMesh& mesh = s.mesh();
  FEValues fe(s.degree(), point_rule());
  std::optional<FEValues> fe_u;
  if (velocity) fe_u.emplace(velocity->space().degree(), point_rule());
  std::vector<double> lp(s.dofs_per_cell()), lu(velocity ? velocity->space().dofs_per_cell() : 0);

  MaterialFields out;
  out.points_per_cell = static_cast<int>(point_rule().points.size());
  out.rho.resize(mesh.size() * out.points_per_cell);
  out.mu.resize(out.rho.size());
  const bool shear = phys.viscosity_plus.kind == ViscosityModel::Kind::cross;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    fe.reinit(mesh.cell(k));
    phi.cell_values(static_cast<int>(k), lp.data());
    if (velocity) {
      fe_u->reinit(mesh.cell(k));
      velocity->cell_values(static_cast<int>(k), lu.data());
    }
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double H = heaviside_h(fem::value_at(fe, lp.data(), q), beta, c_h);
      const double wp = 0.5 * (1.0 + H), wm = 0.5 * (1.0 - H);
      double mu_plus = phys.viscosity_plus.mu;
      if (shear) {
        const double gamma = velocity ? shear_rate(fem::vector_grad_at(*fe_u, lu.data(), q)) : 0.0;
        mu_plus = cross_viscosity(gamma, phys.viscosity_plus);
      }
      const std::size_t i = k * out.points_per_cell + q;
      out.rho[i] = phys.rho_plus * wp + phys.rho_minus * wm;
      out.mu[i] = mu_plus * wp + phys.mu_minus * wm;
    }
  }
  return out;
}

nsolver::InterfaceFn InterfaceFields::as_function() const {
  return [this](int cell, const FEValues& fe, nsolver::InterfacePoint* out) {
    check_points(fe, points_per_cell);
    std::copy_n(points.begin() + static_cast<std::size_t>(cell) * points_per_cell, points_per_cell, out);
  };
}

InterfaceFields surface_tension_forms(const Field& phi, double sigma, double epsilon) {
  const FESpace& s = phi.space();
  const QuadMesh& mesh = s.mesh();
  FEValues fe(s.degree(), point_rule());
  std::vector<double> lp(s.dofs_per_cell());
  InterfaceFields out;
  out.points_per_cell = static_cast<int>(point_rule().points.size());
  out.points.assign(mesh.size() * out.points_per_cell, nsolver::InterfacePoint{});
  if (sigma == 0.0) return out;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    fe.reinit(mesh.cell(k));
    phi.cell_values(static_cast<int>(k), lp.data());
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const Vec2 g = fem::grad_at(fe, lp.data(), q);
      const double d = dirac_eps(fem::value_at(fe, lp.data(), q), g, epsilon);
      if (d == 0.0) continue;
      auto& p = out.points[k * out.points_per_cell + q];
      p.weight = sigma * d;
      p.projector = tangential_projector(g);
    }
  }
  return out;
}

SurfaceTensionSystem assemble_surface_tension(const FESpace& vs, const InterfaceFields& forms, double dt) {
  SurfaceTensionSystem sys;
  sys.matrix = fem::make_matrix(vs);
  const int npc = vs.nodes_per_cell(), nd = vs.dofs_per_cell();
  std::vector<Vec2> pg(npc);
  fem::assemble(
      vs, point_rule(),
      [&](int cell, const FEValues& fe, double* Ke, double* fl) {
        for (std::size_t q = 0; q < fe.n_points(); ++q) {
          const auto& ip = forms.points[static_cast<std::size_t>(cell) * forms.points_per_cell + q];
          if (ip.weight == 0.0) continue;
          const Tensor2& P = ip.projector;
          const double w = ip.weight * fe.JxW(q);
          for (int a = 0; a < npc; ++a) {
            const Vec2& g = fe.grad(q, a);
            pg[a] = {P.xx * g.x + P.xy * g.y, P.yx * g.x + P.yy * g.y};
            fl[a] -= w * (P.xx * g.x + P.xy * g.y);
            fl[npc + a] -= w * (P.yx * g.x + P.yy * g.y);
          }
          for (int c = 0; c < 2; ++c)
            for (int a = 0; a < npc; ++a)
              for (int b = 0; b < npc; ++b) Ke[(c * npc + a) * nd + c * npc + b] += dt * w * dot(pg[a], pg[b]);
        }
      },
      &sys.matrix, &sys.rhs);
  return sys;
}

namespace {

/// Tangential coordinate of a boundary point along a side.
double along(Side s, const Vec2& p) { return (s == Side::left || s == Side::right) ? p.y : p.x; }

/// Constraint one side imposes on a node: fixed components, their values, priority.
struct SideRule {
  bool fix[2] = {false, false};
  Vec2 value{};
  int priority = 0;
};

SideRule side_rule(const ScenarioConfig& c, Side s, const Vec2& p) {
  const BoundaryCondition& bc = c.bc[static_cast<int>(s)];
  BoundaryKind kind = bc.kind;
  Vec2 v = bc.velocity;
  SideRule r;
  if (kind == BoundaryKind::inflow) {
    const double t = along(s, p);
    if (t >= bc.window_lo && t <= bc.window_hi) {
      double scale = 1.0;
      if (bc.parabolic) {
        const double w = bc.window_hi - bc.window_lo;
        scale = 4.0 * (t - bc.window_lo) * (bc.window_hi - t) / (w * w);
      }
      r.fix[0] = r.fix[1] = true;
      r.value = scale * v;
      r.priority = 3;
      return r;
    }
    kind = bc.outside;
    v = {};
  }
  switch (kind) {
    case BoundaryKind::dirichlet:
      r.fix[0] = r.fix[1] = true;
      r.value = v;
      r.priority = 2;
      break;
    case BoundaryKind::slip:
      r.fix[(s == Side::left || s == Side::right) ? 0 : 1] = true;
      r.priority = 1;
      break;
    case BoundaryKind::open:
    case BoundaryKind::inflow:
      break;
  }
  return r;
}

/// Merged rule over every side the point lies on.
SideRule merged_rule(const ScenarioConfig& c, const Vec2& p, fem::SideBits sides) {
  SideRule out;
  int prio[2] = {0, 0};
  for (int s = 0; s < kNumSides; ++s) {
    if (!(sides & (1u << s))) continue;
    const SideRule r = side_rule(c, static_cast<Side>(s), p);
    for (int comp = 0; comp < 2; ++comp)
      if (r.fix[comp] && r.priority > prio[comp]) {
        out.fix[comp] = true;
        prio[comp] = r.priority;
        (comp == 0 ? out.value.x : out.value.y) = comp == 0 ? r.value.x : r.value.y;
      }
  }
  return out;
}

fem::SideBits sides_of(const Extents& d, const Vec2& p) {
  const double tol = 1e-12 * std::max(d.width(), d.height());
  fem::SideBits b = 0;
  if (std::abs(p.x - d.x0) <= tol) b |= 1u << static_cast<int>(Side::left);
  if (std::abs(p.x - d.x1) <= tol) b |= 1u << static_cast<int>(Side::right);
  if (std::abs(p.y - d.y0) <= tol) b |= 1u << static_cast<int>(Side::bottom);
  if (std::abs(p.y - d.y1) <= tol) b |= 1u << static_cast<int>(Side::top);
  return b;
}

double box_distance(const Extents& b, const Vec2& p) {
  const double dx = std::max(b.x0 - p.x, p.x - b.x1);
  const double dy = std::max(b.y0 - p.y, p.y - b.y1);
  if (dx <= 0.0 && dy <= 0.0) return -std::max(dx, dy);
  return -std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
}

Extents jet_column(const LevelSetInit& ls, const Extents& domain) {
  return {ls.jet_x0, ls.jet_x1, ls.jet_tip, domain.y1 + domain.height()};
}

}  // namespace

fem::DirichletMask velocity_mask(const ScenarioConfig& c) {
  return [c](const Vec2& p, fem::SideBits sides) {
    const SideRule r = merged_rule(c, p, sides);
    return std::array<bool, 2>{r.fix[0], r.fix[1]};
  };
}

std::function<Vec2(const Vec2&)> boundary_velocity(const ScenarioConfig& c) {
  return [c](const Vec2& p) { return merged_rule(c, p, sides_of(c.domain, p)).value; };
}

bool in_inflow_window(const ScenarioConfig& c, const Vec2& p) {
  const fem::SideBits sides = sides_of(c.domain, p);
  for (int s = 0; s < kNumSides; ++s) {
    if (!(sides & (1u << s))) continue;
    const BoundaryCondition& bc = c.bc[s];
    if (bc.kind != BoundaryKind::inflow) continue;
    const double t = along(static_cast<Side>(s), p);
    if (t >= bc.window_lo && t <= bc.window_hi) return true;
  }
  return false;
}

double shape_distance(const LevelSetInit& ls, const Extents& domain, const Vec2& p) {
  using S = LevelSetInit::Shape;
  switch (ls.shape) {
    case S::circle:
      return ls.radius - norm(p - ls.center);
    case S::halfplane:
      return dot(p - ls.point, (1.0 / norm(ls.normal)) * ls.normal);
    case S::box:
      return box_distance(ls.box, p);
    case S::zalesak: {
      const double disk = ls.radius - norm(p - ls.center);
      const double bottom = ls.center.y - ls.radius;
      const Extents slot{ls.center.x - 0.5 * ls.slot_width, ls.center.x + 0.5 * ls.slot_width, bottom - ls.radius,
                         bottom + ls.slot_depth};
      return std::min(disk, -box_distance(slot, p));
    }
    case S::jet: {
      double d = box_distance(jet_column(ls, domain), p);
      if (ls.has_bath) d = std::max(d, ls.bath_level - p.y);
      return d;
    }
  }
  return 0.0;
}

std::function<double(const Vec2&)> initial_levelset(const ScenarioConfig& c, double beta) {
  const LevelSetInit ls = c.levelset;
  const Extents domain = c.domain;
  const bool tanh_profile = ls.profile == LevelSetInit::Profile::tanh;
  return [ls, domain, beta, tanh_profile](const Vec2& p) {
    const double d = ls.inside_sign * shape_distance(ls, domain, p);
    return tanh_profile ? beta * std::tanh(d / beta) : d;
  };
}

std::function<Vec2(const Vec2&)> initial_velocity(const ScenarioConfig& c) {
  const LevelSetInit ls = c.levelset;
  const Extents domain = c.domain;
  return [ls, domain](const Vec2& p) -> Vec2 {
    if (ls.shape != LevelSetInit::Shape::jet) return {};
    if (box_distance(jet_column(ls, domain), p) > 0.0) return ls.jet_velocity;
    if (ls.has_bath && p.y < ls.bath_level) return ls.bath_velocity;
    return {};
  };
}

std::function<Vec2(const Vec2&, double)> prescribed_velocity(const FlowConfig& flow) {
  using P = FlowConfig::Prescribed;
  switch (flow.velocity) {
    case P::rotation:
      return [c = flow.center, w = flow.omega](const Vec2& p, double) { return Vec2{-w * (p.y - c.y), w * (p.x - c.x)}; };
    case P::vortex:
      return [T = flow.period](const Vec2& p, double t) {
        constexpr double pi = std::numbers::pi;
        const double sx = std::sin(pi * p.x), sy = std::sin(pi * p.y);
        const double m = std::cos(pi * t / T);
        return Vec2{-sx * sx * std::sin(2 * pi * p.y) * m, sy * sy * std::sin(2 * pi * p.x) * m};
      };
    case P::uniform:
      return [v = flow.value](const Vec2&, double) { return v; };
  }
  return {};
}

double beta_for(const ScenarioConfig& c, const QuadMesh& mesh) {
  return c.num.beta > 0.0 ? c.num.beta : mesh.min_side();
}

namespace {

void build_spaces(SimulationState& s, const ScenarioConfig& c) {
  s.phi_space = std::make_shared<const FESpace>(s.mesh, 1, 1);
  if (c.flow.mode == FlowConfig::Mode::navier_stokes) {
    s.velocity_space = std::make_shared<const FESpace>(s.mesh, 2, 2, velocity_mask(c));
    s.pressure_space = std::make_shared<const FESpace>(s.mesh, 1, 1);
  } else {
    s.velocity_space.reset();
    s.pressure_space.reset();
  }
}

/// Overwrites the constrained velocity dofs with the boundary data.
void apply_boundary_values(Field& U, const ScenarioConfig& c) {
  const auto g = boundary_velocity(c);
  const FESpace& vs = U.space();
  for (int dof : vs.dirichlet_dofs()) {
    const Vec2 v = g(vs.node_point(dof / 2));
    U[dof] = dof % 2 == 0 ? v.x : v.y;
  }
  U.distribute();
}

}  // namespace

SimulationState initialize(const ScenarioConfig& c) {
  validate(c);
  SimulationState s;
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform(c.domain, c.h0));
  const int r_max = c.num.r_max;
  if (r_max > 0) {
    // Each sweep uses the beta of the current mesh, so the result is a fixed point of the per-step adapt.
    for (int it = 0; it < 50; ++it) {
      const double beta = beta_for(c, *mesh);
      const auto phi0 = initial_levelset(c, beta);
      std::vector<double> bary(mesh->size());
      for (std::size_t k = 0; k < mesh->size(); ++k) bary[k] = phi0(mesh->cell(k).barycenter());
      auto [next, report] = adapt(*mesh, bary, beta, c.num.c_r, c.num.c_c, r_max);
      mesh = std::make_shared<const QuadMesh>(std::move(next));
      if (report.unchanged()) break;
    }
  }
  s.mesh = mesh;
  build_spaces(s, c);
  const double beta = beta_for(c, *mesh);
  s.ls = {fem::interpolate(s.phi_space, initial_levelset(c, beta)), beta, 0.0};
  if (s.has_flow()) {
    s.ns = nsolver::zero_state(s.velocity_space, s.pressure_space);
    s.ns.U_n = fem::interpolate_vector(s.velocity_space, initial_velocity(c));
    apply_boundary_values(s.ns.U_n, c);
    s.ns.U_nm1 = s.ns.U_n;
    if (c.phys.gravity.x != 0.0 || c.phys.gravity.y != 0.0) {
      const MaterialFields mat = blend(s.ls.phi, c.phys, beta, c.num.c_h, &s.ns.U_n);
      s.ns.P_n = nsolver::initial_pressure(s.pressure_space, mat.as_function(), c.phys.gravity,
                                           c.num.lin_solver_rel_tol, c.num.lin_solver_max_iter);
    }
  }
  return s;
}

SimulationState advance(const SimulationState& state, const ScenarioConfig& c, double dt_cap, StepInfo* info) {
  const NumericalParams& num = c.num;
  const double beta = state.ls.beta;
  const bool flow = state.has_flow();
  StepInfo local;
  StepInfo& si = info ? *info : local;
  si = StepInfo{};

  // Velocities seen by the level set.
  const auto prescribed = flow ? std::function<Vec2(const Vec2&, double)>{} : prescribed_velocity(c.flow);
  const double t = state.t;
  levelset::VelocityField u_n = flow ? levelset::VelocityField::from_field(state.ns.U_n)
                                     : levelset::VelocityField::from_function([&](const Vec2& p) { return prescribed(p, t); });
  const double u_max = u_n.max_norm(*state.phi_space);
  const double lambda = levelset::compute_lambda(u_max, num.c_lambda);

  si.dt_levelset = levelset::cfl_dt(state.ls.phi, u_n, lambda, beta, num.c_cfl, num.c_s, c.dt_max);
  if (flow) si.dt_ns = nsolver::cfl_dt_ns(state.ns.U_n, *state.mesh, num.c_cfl, c.dt_max);
  double dt = c.dt > 0.0 ? c.dt : std::min({si.dt_levelset, si.dt_ns, c.dt_max});
  if (flow && c.dt == 0.0) {
    if (state.ns.steps == 0)
      dt *= c.first_step_factor;
    else
      dt = std::min(dt, 2.0 * state.ns.dt_n);
  }
  dt = std::min(dt, dt_cap);
  si.dt = dt;

  // Extrapolated velocities at t + dt/2 and t + dt.
  Field U_half, U_np1;
  levelset::VelocityField u_half, u_np1;
  if (flow) {
    const double r = state.ns.steps == 0 ? 0.0 : dt / state.ns.dt_n;
    const Eigen::VectorXd diff = state.ns.U_n.values() - state.ns.U_nm1.values();
    U_half = Field(state.velocity_space, state.ns.U_n.values() + 0.5 * r * diff);
    U_np1 = Field(state.velocity_space, state.ns.U_n.values() + r * diff);
    u_half = levelset::VelocityField::from_field(U_half);
    u_np1 = levelset::VelocityField::from_field(U_np1);
  } else {
    u_half = levelset::VelocityField::from_function([&](const Vec2& p) { return prescribed(p, t + 0.5 * dt); });
    u_np1 = levelset::VelocityField::from_function([&](const Vec2& p) { return prescribed(p, t + dt); });
  }

  bool any_inflow = false;
  for (const auto& bc : c.bc) any_inflow |= bc.kind == BoundaryKind::inflow;
  levelset::InflowData inflow;
  if (any_inflow) {
    const auto phi0 = initial_levelset(c, beta);
    inflow = [&c, phi0](const Vec2& p, double) -> std::optional<double> {
      if (in_inflow_window(c, p)) return phi0(p);
      return std::nullopt;
    };
  }

  levelset::LevelSetState ls = state.ls;
  ls.lambda = lambda;
  levelset::StepDiagnostics diag;
  SimulationState next = state;
  next.ls = levelset::ssprk3_step(ls, u_n, u_half, u_np1, t, dt, num, inflow, state.mass_cache.get(), &diag);
  si.viscosities = std::move(diag.stage3);
  si.levelset_iterations = diag.solver_iterations;

  if (flow) {
    const MaterialFields mat = blend(next.ls.phi, c.phys, beta, num.c_h, &U_np1);
    si.rho_min = mat.rho_min();
    si.rho_max = mat.rho_max();
    si.mu_min = mat.mu_min();
    si.mu_max = mat.mu_max();
    InterfaceFields tension;
    nsolver::PredictionData data;
    data.material = mat.as_function();
    data.gravity = c.phys.gravity;
    data.dirichlet = boundary_velocity(c);
    if (c.phys.sigma > 0.0) {
      tension = surface_tension_forms(next.ls.phi, c.phys.sigma, beta * std::tanh(num.c_h));
      data.interface = tension.as_function();
    }
    data.c_stab = num.c_stab;
    data.advection = c.flow.advection;
    data.tol = num.lin_solver_rel_tol;
    data.max_iter = num.lin_solver_max_iter;
    next.ns = nsolver::step(state.ns, dt, data, si.rho_min, si.mu_min, &si.ns);
  }
  next.t = t + dt;
  next.step = state.step + 1;

  if (num.r_max > 0) {
    auto [mesh, report] = fem::adapt(*next.mesh, next.ls.phi, beta, num.c_r, num.c_c, num.r_max);
    si.adapt = report;
    if (!report.unchanged()) {
      SimulationState moved = next;
      moved.mesh = std::make_shared<const QuadMesh>(std::move(mesh));
      build_spaces(moved, c);
      moved.ls.phi = fem::transfer_field(next.ls.phi, moved.phi_space);
      if (flow) {
        moved.ns.U_n = fem::transfer_field(next.ns.U_n, moved.velocity_space);
        moved.ns.U_nm1 = fem::transfer_field(next.ns.U_nm1, moved.velocity_space);
        moved.ns.P_n = fem::transfer_field(next.ns.P_n, moved.pressure_space);
        moved.ns.Psi_n = fem::transfer_field(next.ns.Psi_n, moved.pressure_space);
        moved.ns.Psi_nm1 = fem::transfer_field(next.ns.Psi_nm1, moved.pressure_space);
      }
      moved.mass_cache = std::make_shared<levelset::MassCache>();
      moved.ls.beta = beta_for(c, *moved.mesh);
      next = std::move(moved);
    }
  }
  return next;
}

}  // namespace levelflow::coupling
