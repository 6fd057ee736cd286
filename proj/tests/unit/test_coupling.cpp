#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "levelflow/coupling.hpp"

using namespace levelflow;
using namespace levelflow::coupling;
using fem::FESpace;
using fem::Field;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const FESpace> q1_space(double h, const Extents& d = {}) {
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform(d, h));
  return std::make_shared<const FESpace>(mesh, 1, 1);
}

/// Closed unit box, matched phases, no gravity or tension.
ScenarioConfig closed_box(double h0, double rho, double mu) {
  ScenarioConfig c;
  c.name = "box";
  c.domain = {0.0, 1.0, 0.0, 1.0};
  c.h0 = h0;
  c.t_final = 1.0;
  c.dt = 0.01;
  c.levelset.shape = LevelSetInit::Shape::circle;
  c.levelset.center = {0.5, 0.5};
  c.levelset.radius = 0.25;
  c.phys.rho_plus = c.phys.rho_minus = rho;
  c.phys.viscosity_plus = ViscosityModel::constant(mu);
  c.phys.mu_minus = mu;
  c.num.r_max = 0;
  return c;
}

double kinetic_energy(const Field& U, double rho) {
  const double ex = fem::l2_error_vector(U, [](const Vec2&) { return Vec2{}; });
  return 0.5 * rho * ex * ex;
}

}  // namespace

TEST(HeavisideH, Examples) {
  const double beta = 0.01, w = beta * std::tanh(1.25);
  EXPECT_DOUBLE_EQ(heaviside_h(0.0, beta, 1.25), 0.0);
  EXPECT_DOUBLE_EQ(heaviside_h(2 * beta, beta, 1.25), 1.0);
  EXPECT_DOUBLE_EQ(heaviside_h(-2 * beta, beta, 1.25), -1.0);
  EXPECT_NEAR(heaviside_h(0.5 * w, beta, 1.25), 0.5, 1e-15);
  EXPECT_NEAR(heaviside_h(-0.25 * w, beta, 1.25), -0.25, 1e-15);
}

TEST(Blend, PhaseValuesAndMidpoint) {
  auto s = q1_space(0.25);
  PhysicalParams phys;
  phys.rho_plus = 1000.0;
  phys.rho_minus = 1.0;
  phys.viscosity_plus = ViscosityModel::constant(10.0);
  phys.mu_minus = 0.1;

  auto at = [&](double v) { return blend(fem::interpolate(s, [v](const Vec2&) { return v; }), phys, 0.1, 1.25); };
  const MaterialFields plus = at(1.0), minus = at(-1.0), mid = at(0.0);
  for (double r : plus.rho) EXPECT_DOUBLE_EQ(r, 1000.0);
  for (double m : plus.mu) EXPECT_DOUBLE_EQ(m, 10.0);
  for (double r : minus.rho) EXPECT_DOUBLE_EQ(r, 1.0);
  for (double m : minus.mu) EXPECT_DOUBLE_EQ(m, 0.1);
  for (double r : mid.rho) EXPECT_DOUBLE_EQ(r, 500.5);
  EXPECT_EQ(mid.points_per_cell, 9);
  EXPECT_EQ(mid.rho.size(), s->mesh().size() * 9);
}

TEST(CrossViscosity, Examples) {
  const auto shampoo = ViscosityModel::cross(5.7, 1e-3, 15.0, 1.0);
  EXPECT_DOUBLE_EQ(cross_viscosity(0.0, shampoo), 5.7);
  EXPECT_NEAR(cross_viscosity(15.0, shampoo), 2.8505, 1e-12);
  const auto modified = ViscosityModel::cross(5.7, 1e-3, 970.0, 3.0);
  EXPECT_NEAR(cross_viscosity(970.0, modified), 1e-3 + 0.5 * (5.7 - 1e-3), 1e-12);
  EXPECT_DOUBLE_EQ(cross_viscosity(123.0, ViscosityModel::constant(0.3)), 0.3);
}

TEST(CrossProperty, MonotoneBetweenLimits) {
  const auto m = ViscosityModel::cross(5.7, 1e-3, 970.0, 3.0);
  double prev = cross_viscosity(0.0, m);
  for (double g = 1.0; g < 1e6; g *= 1.7) {
    const double mu = cross_viscosity(g, m);
    EXPECT_LE(mu, prev);
    EXPECT_GE(mu, 1e-3);
    prev = mu;
  }
}

TEST(ShearRate, SimpleShear) {
  // u = (y, 0): grad u = [[0, 1], [0, 0]].
  EXPECT_NEAR(shear_rate({0.0, 1.0, 0.0, 0.0}), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(shear_rate({0.0, 1.0, -1.0, 0.0}), 0.0);
}

TEST(DiracEps, Examples) {
  const double eps = 0.02;
  EXPECT_DOUBLE_EQ(dirac_eps(eps, {1.0, 0.0}, eps), 0.0);
  EXPECT_DOUBLE_EQ(dirac_eps(-0.5, {1.0, 0.0}, eps), 0.0);
  EXPECT_DOUBLE_EQ(dirac_eps(0.0, {1.0, 0.0}, eps), 1.0 / eps);
  EXPECT_DOUBLE_EQ(dirac_eps(0.0, {0.0, 0.0}, eps), 0.0);
  // The diagonal gradient widens the support by sqrt(2).
  EXPECT_GT(dirac_eps(1.2 * eps, {1.0, 1.0}, eps), 0.0);
}

TEST(DiracEps, LineIntegralIsOne) {
  const double eps = 0.02;
  for (const Vec2 dir : {Vec2{1.0, 0.0}, Vec2{1.0, 1.0}, Vec2{0.3, -2.0}}) {
    // Phi = g . x along the unit normal n = g / |g|: Phi(t) = |g| t.
    const Vec2 g = 2.5 * dir;
    const int n = 200000;
    const double L = 1.0, dt = 2 * L / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = -L + (i + 0.5) * dt;
      sum += dirac_eps(norm(g) * t, g, eps) * dt;
    }
    EXPECT_NEAR(sum, 1.0, 0.05);
  }
}

TEST(DiracEps, CircleIntegralMatchesPerimeter) {
  const double R = 0.25, eps = 0.01;
  auto mesh = QuadMesh::build_uniform({0.0, 1.0, 0.0, 1.0}, 1.0 / 128);
  const double total = fem::integrate(
      mesh,
      [&](const Vec2& p) {
        const Vec2 r = p - Vec2{0.5, 0.5};
        const double d = norm(r);
        return dirac_eps(R - d, (-1.0 / d) * r, eps);
      },
      4);
  EXPECT_NEAR(total / (2 * pi * R), 1.0, 0.05);
}

TEST(TangentialProjector, AnnihilatesNormal) {
  const Vec2 g{0.6, -1.3};
  const Tensor2 P = tangential_projector(g);
  EXPECT_NEAR(P.xx * g.x + P.xy * g.y, 0.0, 1e-15);
  EXPECT_NEAR(P.yx * g.x + P.yy * g.y, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(P.xy, P.yx);
  const Tensor2 PP = P * P;
  EXPECT_NEAR(frobenius({PP.xx - P.xx, PP.xy - P.xy, PP.yx - P.yx, PP.yy - P.yy}), 0.0, 1e-14);
  EXPECT_EQ(tangential_projector({0.0, 0.0}), (Tensor2{1.0, 0.0, 0.0, 1.0}));
}

TEST(SurfaceTensionForms, ZeroSigmaOrFarInterfaceGivesZero) {
  auto s = q1_space(1.0 / 16);
  auto mesh = s->mesh_ptr();
  auto vs = std::make_shared<const FESpace>(mesh, 2, 2, fem::all_boundary_mask());
  const Field circle = fem::interpolate(s, [](const Vec2& p) { return 0.25 - norm(p - Vec2{0.5, 0.5}); });
  const Field far = fem::interpolate(s, [](const Vec2& p) { return 5.0 + p.x; });
  for (const auto& forms : {surface_tension_forms(circle, 0.0, 0.02), surface_tension_forms(far, 1.0, 0.02)}) {
    for (const auto& p : forms.points) EXPECT_EQ(p.weight, 0.0);
    const auto sys = assemble_surface_tension(*vs, forms, 0.1);
    EXPECT_EQ(sys.rhs.norm(), 0.0);
    EXPECT_EQ(fem::SparseMatrix(sys.matrix).norm(), 0.0);
  }
}

TEST(SurfaceTensionProperty, ImplicitFormSymmetricPositiveSemidefinite) {
  auto s = q1_space(1.0 / 8);
  auto vs = std::make_shared<const FESpace>(s->mesh_ptr(), 2, 2, fem::all_boundary_mask());
  const Field phi = fem::interpolate(s, [](const Vec2& p) { return 0.3 - norm(p - Vec2{0.45, 0.55}); });
  const auto sys = assemble_surface_tension(*vs, surface_tension_forms(phi, 0.7, 0.1), 0.05);
  const Eigen::MatrixXd A(sys.matrix);
  EXPECT_GT(A.norm(), 0.0);
  EXPECT_LT((A - A.transpose()).norm(), 1e-12 * A.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12 * A.norm());
}

TEST(SurfaceTensionForms, CircleRhsPointsInward) {
  // The explicit force on a circle is a pressure-like pull toward the center:
  // its integral against V = x - c is -sigma * perimeter.
  auto s = q1_space(1.0 / 64);
  auto vs = std::make_shared<const FESpace>(s->mesh_ptr(), 2, 2);
  const double R = 0.25, sigma = 2.0;
  const Field phi = fem::interpolate(s, [&](const Vec2& p) { return R - norm(p - Vec2{0.5, 0.5}); });
  const auto sys = assemble_surface_tension(*vs, surface_tension_forms(phi, sigma, 1.0 / 64), 0.0);
  const Field V = fem::interpolate_vector(vs, [](const Vec2& p) { return p - Vec2{0.5, 0.5}; });
  const double work = sys.rhs.dot(fem::restrict_to_free(*vs, V.values()));
  EXPECT_NEAR(work / (-sigma * 2 * pi * R), 1.0, 0.05);
}

TEST(BlendProperty, BoundsAtEveryPoint) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto s = q1_space(1.0 / 8);
  auto vs = std::make_shared<const FESpace>(s->mesh_ptr(), 2, 2);
  PhysicalParams phys;
  phys.rho_plus = 1020.0;
  phys.rho_minus = 1.2;
  phys.viscosity_plus = ViscosityModel::cross(5.7, 1e-3, 15.0, 1.0);
  phys.mu_minus = 2e-5;
  for (int trial = 0; trial < 5; ++trial) {
    Field phi(s), U(vs);
    for (int i = 0; i < phi.values().size(); ++i) phi[i] = 0.2 * u(rng);
    for (int i = 0; i < U.values().size(); ++i) U[i] = 50.0 * u(rng);
    const MaterialFields m = blend(phi, phys, 0.1, 1.25, &U);
    EXPECT_GE(m.rho_min(), 1.2);
    EXPECT_LE(m.rho_max(), 1020.0);
    EXPECT_GE(m.mu_min(), 2e-5);
    EXPECT_LE(m.mu_max(), 5.7);
  }
}

TEST(Boundary, InflowWindowOverridesSlipAndOutsideKindApplies) {
  ScenarioConfig c = closed_box(0.25, 1.0, 1.0);
  c.bc[static_cast<int>(Side::top)] = {BoundaryKind::inflow, {0.0, -1.0}, 0.4, 0.6, BoundaryKind::open, false};
  c.bc[static_cast<int>(Side::left)] = {BoundaryKind::slip};
  c.bc[static_cast<int>(Side::right)] = {BoundaryKind::open};
  const auto mask = velocity_mask(c);
  const auto g = boundary_velocity(c);
  const unsigned top = 1u << static_cast<int>(Side::top), left = 1u << static_cast<int>(Side::left);
  const unsigned bottom = 1u << static_cast<int>(Side::bottom), right = 1u << static_cast<int>(Side::right);

  EXPECT_EQ(mask({0.5, 1.0}, top), (std::array<bool, 2>{true, true}));
  EXPECT_EQ(g({0.5, 1.0}), (Vec2{0.0, -1.0}));
  EXPECT_EQ(mask({0.8, 1.0}, top), (std::array<bool, 2>{false, false}));
  EXPECT_EQ(mask({0.0, 0.5}, left), (std::array<bool, 2>{true, false}));
  EXPECT_EQ(mask({0.0, 1.0}, left | top), (std::array<bool, 2>{true, false}));
  EXPECT_EQ(mask({1.0, 0.0}, right | bottom), (std::array<bool, 2>{true, true}));
  EXPECT_EQ(mask({1.0, 0.5}, right), (std::array<bool, 2>{false, false}));
  EXPECT_TRUE(in_inflow_window(c, {0.45, 1.0}));
  EXPECT_FALSE(in_inflow_window(c, {0.45, 0.99}));
  EXPECT_FALSE(in_inflow_window(c, {0.7, 1.0}));
}

TEST(Boundary, ParabolicProfile) {
  ScenarioConfig c = closed_box(0.25, 1.0, 1.0);
  c.bc[static_cast<int>(Side::left)] = {BoundaryKind::inflow, {2.0, 0.0}, 0.0, 1.0, BoundaryKind::dirichlet, true};
  const auto g = boundary_velocity(c);
  EXPECT_DOUBLE_EQ(g({0.0, 0.5}).x, 2.0);
  EXPECT_DOUBLE_EQ(g({0.0, 0.25}).x, 1.5);
}

TEST(InitialLevelSet, Shapes) {
  ScenarioConfig c = closed_box(0.25, 1.0, 1.0);
  auto phi = initial_levelset(c, 0.01);
  EXPECT_DOUBLE_EQ(phi({0.5, 0.5}), 0.25);
  EXPECT_DOUBLE_EQ(phi({1.0, 0.5}), -0.25);

  c.levelset.inside_sign = -1;
  c.levelset.profile = LevelSetInit::Profile::tanh;
  phi = initial_levelset(c, 0.01);
  EXPECT_NEAR(phi({0.5, 0.5}), -0.01 * std::tanh(25.0), 1e-15);

  c.levelset = {};
  c.levelset.shape = LevelSetInit::Shape::zalesak;
  c.levelset.center = {0.5, 0.75};
  c.levelset.radius = 0.15;
  c.levelset.slot_width = 0.05;
  c.levelset.slot_depth = 0.25;
  phi = initial_levelset(c, 0.01);
  EXPECT_LT(phi({0.5, 0.65}), 0.0);
  EXPECT_GT(phi({0.4, 0.65}), 0.0);
  EXPECT_NEAR(phi({0.5, 0.87}), 0.02, 1e-12);

  c.levelset = {};
  c.levelset.shape = LevelSetInit::Shape::jet;
  c.levelset.jet_x0 = 0.45;
  c.levelset.jet_x1 = 0.55;
  c.levelset.jet_tip = 0.8;
  c.levelset.has_bath = true;
  c.levelset.bath_level = 0.2;
  c.levelset.jet_velocity = {0.0, -1.0};
  c.levelset.bath_velocity = {0.5, 0.0};
  phi = initial_levelset(c, 0.01);
  EXPECT_GT(phi({0.5, 0.95}), 0.0);
  EXPECT_GT(phi({0.9, 0.1}), 0.0);
  EXPECT_LT(phi({0.9, 0.5}), 0.0);
  EXPECT_NEAR(phi({0.5, 0.5}), -0.3, 1e-12);
  const auto u0 = initial_velocity(c);
  EXPECT_EQ(u0({0.5, 0.9}), (Vec2{0.0, -1.0}));
  EXPECT_EQ(u0({0.1, 0.1}), (Vec2{0.5, 0.0}));
  EXPECT_EQ(u0({0.1, 0.5}), (Vec2{}));
}

TEST(PrescribedVelocity, Fields) {
  FlowConfig f;
  f.mode = FlowConfig::Mode::prescribed;
  f.velocity = FlowConfig::Prescribed::rotation;
  f.center = {0.5, 0.5};
  auto u = prescribed_velocity(f);
  EXPECT_EQ(u({1.0, 0.5}, 0.0), (Vec2{0.0, 0.5}));
  f.velocity = FlowConfig::Prescribed::vortex;
  f.period = 0.1;
  u = prescribed_velocity(f);
  EXPECT_NEAR(u({0.5, 0.25}, 0.0).x, -1.0, 1e-15);
  EXPECT_NEAR(u({0.5, 0.25}, 0.05).x, 0.0, 1e-15);
}

TEST(Initialize, AdaptedMeshAndBeta) {
  ScenarioConfig c = closed_box(0.125, 1.0, 1.0);
  c.num.r_max = 2;
  const SimulationState s = initialize(c);
  EXPECT_DOUBLE_EQ(s.mesh->min_side(), 0.125 / 4);
  EXPECT_DOUBLE_EQ(s.ls.beta, 0.125 / 4);
  EXPECT_TRUE(is_balanced(*s.mesh));
  EXPECT_TRUE(s.has_flow());
  EXPECT_EQ(s.ns.U_n.values().norm(), 0.0);
  c.num.beta = 0.05;
  EXPECT_DOUBLE_EQ(initialize(c).ls.beta, 0.05);
}

TEST(Advance, ZeroStateStaysZero) {
  ScenarioConfig c = closed_box(0.125, 1.0, 1.0);
  c.phys.rho_plus = 3.0;
  c.phys.sigma = 0.0;
  SimulationState s = initialize(c);
  for (int n = 0; n < 5; ++n) s = advance(s, c);
  EXPECT_EQ(s.ns.U_n.values().norm(), 0.0);
  EXPECT_EQ(s.ns.P_n.values().norm(), 0.0);
  EXPECT_NEAR(s.t, 0.05, 1e-15);
  EXPECT_EQ(s.step, 5);
}

TEST(Advance, MatchedPhasesDecoupleFromLevelSet) {
  ScenarioConfig c = closed_box(0.125, 1.3, 0.7);
  c.phys.gravity = {0.0, -1.0};
  c.bc[static_cast<int>(Side::top)].velocity = {1.0, 0.0};
  SimulationState s = initialize(c);

  nsolver::PredictionData data;
  data.material = [](int, const fem::FEValues& fe, double* r, double* m) {
    std::fill_n(r, fe.n_points(), 1.3);
    std::fill_n(m, fe.n_points(), 0.7);
  };
  data.gravity = c.phys.gravity;
  data.dirichlet = boundary_velocity(c);
  data.tol = 1e-12;
  c.num.lin_solver_rel_tol = 1e-12;

  nsolver::NSState alone = s.ns;
  for (int n = 0; n < 3; ++n) {
    s = advance(s, c);
    alone = nsolver::step(alone, c.dt, data, 1.3, 0.7);
    EXPECT_LT((s.ns.U_n.values() - alone.U_n.values()).norm(), 1e-8 * (1.0 + alone.U_n.values().norm()));
    EXPECT_LT((s.ns.P_n.values() - alone.P_n.values()).norm(), 1e-8 * (1.0 + alone.P_n.values().norm()));
  }
  EXPECT_GT(alone.U_n.values().norm(), 0.0);
}

TEST(CouplingProperty, KineticEnergyNeverIncreasesInClosedBox) {
  ScenarioConfig c = closed_box(0.125, 1.0, 0.05);
  SimulationState s = initialize(c);
  // u = curl of sin^2(pi x) sin^2(pi y): divergence free, zero on the walls.
  s.ns.U_n = fem::interpolate_vector(s.velocity_space, [](const Vec2& p) {
    const double sx = std::sin(pi * p.x), sy = std::sin(pi * p.y);
    return Vec2{2 * pi * sx * sx * sy * std::cos(pi * p.y), -2 * pi * sy * sy * sx * std::cos(pi * p.x)};
  });
  s.ns.U_nm1 = s.ns.U_n;
  double prev = kinetic_energy(s.ns.U_n, 1.0);
  for (int n = 0; n < 20; ++n) {
    s = advance(s, c);
    const double e = kinetic_energy(s.ns.U_n, 1.0);
    EXPECT_LE(e, prev * (1.0 + 1e-12)) << "step " << n;
    prev = e;
  }
}

TEST(Advance, PrescribedRotationKeepsCircleArea) {
  ScenarioConfig c;
  c.name = "rot";
  c.domain = {-1.0, 1.0, -1.0, 1.0};
  c.h0 = 1.0 / 16;
  c.t_final = 1.0;
  c.dt = 0.01;
  c.levelset.shape = LevelSetInit::Shape::circle;
  c.levelset.center = {0.5, 0.0};
  c.levelset.radius = 0.25;
  c.levelset.profile = LevelSetInit::Profile::tanh;
  c.flow.mode = FlowConfig::Mode::prescribed;
  c.flow.velocity = FlowConfig::Prescribed::rotation;
  c.num.r_max = 2;
  for (auto& bc : c.bc) bc.kind = BoundaryKind::open;
  SimulationState s = initialize(c);
  EXPECT_FALSE(s.has_flow());
  const auto area = [](const Field& phi) {
    return fem::integrate(phi.space().mesh(), [&](const Vec2& p) { return fem::evaluate(phi, p) > 0 ? 1.0 : 0.0; }, 4);
  };
  const double a0 = area(s.ls.phi);
  for (int n = 0; n < 30; ++n) s = advance(s, c);
  EXPECT_NEAR(s.t, 0.3, 1e-12);
  EXPECT_NEAR(area(s.ls.phi) / a0, 1.0, 0.03);
  const Vec2 expected{0.5 * std::cos(0.3), 0.5 * std::sin(0.3)};
  EXPECT_GT(fem::evaluate(s.ls.phi, expected), 0.0);
  EXPECT_DOUBLE_EQ(s.ls.beta, s.mesh->min_side());
}
