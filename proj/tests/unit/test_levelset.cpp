#include <gtest/gtest.h>

#include <cmath>

#include "levelflow/levelset.hpp"
#include "test_helpers.hpp"

using namespace levelflow;
using namespace levelflow::levelset;
using fem::FESpace;
using fem::Field;

namespace {

std::shared_ptr<const FESpace> q1_space(const Extents& d, double h0) {
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform(d, h0));
  return std::make_shared<const FESpace>(mesh, 1, 1);
}

VelocityField constant_velocity(Vec2 v) {
  return VelocityField::from_function([v](const Vec2&) { return v; });
}

}  // namespace

TEST(SignH, ThresholdCases) {
  const double beta = 0.1;
  EXPECT_EQ(sign_h(0.0, beta, 0.5), 0);
  EXPECT_EQ(sign_h(2 * beta, beta, 0.5), 1);
  EXPECT_EQ(sign_h(-2 * beta, beta, 0.5), -1);
  // tanh(0.5) = 0.46211... > 0.46
  EXPECT_GT(std::tanh(0.5), 0.46);
  EXPECT_EQ(sign_h(-0.46 * beta, beta, 0.5), 0);
  EXPECT_EQ(sign_h(-0.47 * beta, beta, 0.5), -1);
}

TEST(ComputeLambda, Examples) {
  EXPECT_EQ(compute_lambda(0.0, 0.01), 0.0);
  EXPECT_NEAR(compute_lambda(5.0, 0.01), 0.05, 1e-16);
  EXPECT_NEAR(compute_lambda(1.75, 0.01), 0.0175, 1e-16);
}

TEST(TransportRhs, Examples) {
  const double beta = 0.05;
  EXPECT_EQ(transport_rhs(0.3, {1, 0}, {1, 0}, 0.0, beta, 0.5), -1.0);
  // Equilibrium profile beta tanh(d/beta) in 1D: |grad| = 1 - tanh^2 = G.
  for (double d : {-0.08, -0.03, 0.01, 0.02, 0.07}) {
    const double phi = beta * std::tanh(d / beta);
    const double grad = 1.0 - std::tanh(d / beta) * std::tanh(d / beta);
    EXPECT_NEAR(transport_rhs(phi, {grad, 0}, {0, 0}, 1.0, beta, 0.5), 0.0, 1e-15);
  }
  EXPECT_NEAR(transport_rhs(2 * beta, {0, 0}, {0, 0}, 1.0, beta, 0.5), -3.0, 1e-15);
}

TEST(EntropyResidual, Examples) {
  auto s = q1_space({0, 1, 0, 1}, 0.125);
  NumericalParams p;
  const auto u0 = constant_velocity({0, 0});
  const Field c = fem::interpolate(s, [](const Vec2&) { return 0.3; });
  for (double r : entropy_residual(c, c, 0.01, u0, 0.0, 0.1, p)) EXPECT_EQ(r, 0.0);

  // Steady linear field advected along x: R = p x^(p-1), maximized at the rightmost quadrature point.
  const Field x = fem::interpolate(s, [](const Vec2& q) { return q.x; });
  const auto R = entropy_residual(x, x, 0.01, constant_velocity({1, 0}), 0.0, 0.1, p);
  const double g_right = 0.5 + 0.5 * std::sqrt(0.6);
  for (std::size_t k = 0; k < s->mesh().size(); ++k) {
    const Cell& cell = s->mesh().cell(k);
    const double xq = cell.box.x0 + g_right * cell.hx();
    const double oracle = p.entropy_p * std::pow(xq, p.entropy_p - 1);
    EXPECT_NEAR(R[k], oracle, 1e-12 * std::max(1.0, oracle));
  }

  // Pure time jump from 0 to c.
  const Field zero(s);
  for (double r : entropy_residual(c, zero, 0.01, u0, 0.0, 0.1, p))
    EXPECT_NEAR(r, std::pow(0.3, p.entropy_p) / 0.01, 1e-12 * std::pow(0.3, p.entropy_p) / 0.01);
}

TEST(Viscosities, ConstantFieldHasNoViscosity) {
  auto s = q1_space({0, 1, 0, 1}, 0.125);
  const Field c = fem::interpolate(s, [](const Vec2&) { return -0.2; });
  const auto v = viscosities(c, c, 0.01, constant_velocity({0.3, -1}), 0.0, 0.1, NumericalParams{});
  for (std::size_t k = 0; k < v.mu_stab.size(); ++k) {
    EXPECT_EQ(v.mu_ent[k], 0.0);
    EXPECT_EQ(v.mu_stab[k], 0.0);
  }
}

TEST(Viscosities, LinearViscosityArithmetic) {
  // Cells of diameter 0.01.
  const double side = 0.01 / std::sqrt(2.0);
  auto s = q1_space({0, 10 * side, 0, 10 * side}, side);
  ASSERT_NEAR(s->mesh().cell(0).diameter(), 0.01, 1e-15);
  const Field phi = fem::interpolate(s, [](const Vec2& q) { return q.x - q.y; });
  const auto v = viscosities(phi, phi, 0.01, constant_velocity({0.6, 0.8}), 0.0, 0.1, NumericalParams{});
  for (double m : v.mu_lin) EXPECT_NEAR(m, 0.001, 1e-15);
}

TEST(Viscosities, EntropyViscosityScalesWithMeshSquared) {
  NumericalParams p;
  p.entropy_p = 2.0;
  auto phi0 = [](const Vec2& q) { return 0.3 * std::sin(2 * q.x + 1) + 0.2 * q.y; };
  const auto u = constant_velocity({1.0, 0.5});
  double ent[2], lin[2];
  for (int r = 0; r < 2; ++r) {
    auto s = q1_space({0, 1, 0, 1}, 1.0 / (32 << r));
    const Field phi = fem::interpolate(s, phi0);
    const auto v = viscosities(phi, phi, 0.01, u, 0.0, 0.1, p);
    ent[r] = *std::max_element(v.mu_ent.begin(), v.mu_ent.end());
    lin[r] = *std::max_element(v.mu_lin.begin(), v.mu_lin.end());
  }
  EXPECT_NEAR(ent[0] / ent[1], 4.0, 0.4);
  EXPECT_NEAR(lin[0] / lin[1], 2.0, 1e-12);
}

TEST(ViscositiesProperty, StabIsNonnegativeAndBelowLinear) {
  auto mesh = test_support::adapted_mesh(
      {0, 1, 0, 1}, 0.0625, 2, [](const Vec2& p) { return test_support::circle_distance(p, {0.5, 0.5}, 0.3); },
      0.02);
  auto s = std::make_shared<const FESpace>(mesh, 1, 1);
  const Field phi_n =
      fem::interpolate(s, [](const Vec2& p) { return 0.02 * std::tanh((0.3 - norm(p - Vec2{0.5, 0.5})) / 0.02); });
  const Field phi =
      fem::interpolate(s, [](const Vec2& p) { return 0.02 * std::tanh((0.3 - norm(p - Vec2{0.51, 0.5})) / 0.02); });
  const auto v = viscosities(phi, phi_n, 0.01, constant_velocity({1, 0}), 0.01, 0.02, NumericalParams{});
  for (std::size_t k = 0; k < v.mu_stab.size(); ++k) {
    EXPECT_GE(v.mu_stab[k], 0.0);
    EXPECT_LE(v.mu_stab[k], v.mu_lin[k]);
  }
}

TEST(Ssprk3, ZeroVelocityIsFixedPoint) {
  auto s = q1_space({0, 1, 0, 1}, 0.0625);
  LevelSetState st{fem::interpolate(s, [](const Vec2& p) { return std::sin(3 * p.x) * p.y - 0.2; }), 0.05, 0.0};
  const auto u = constant_velocity({0, 0});
  const auto next = ssprk3_step(st, u, u, u, 0.0, 0.01, NumericalParams{});
  EXPECT_EQ((next.phi.values() - st.phi.values()).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(CflDt, Examples) {
  const double side = 0.01 / std::sqrt(2.0);
  auto s = q1_space({0, 20 * side, 0, 20 * side}, side);
  const Field phi = fem::interpolate(s, [side](const Vec2& p) { return p.y - 10 * side; });
  EXPECT_NEAR(cfl_dt(phi, constant_velocity({1.2, 1.6}), 0.0, 0.01, 0.25, 0.5, 1.0), 1.25e-3, 1e-15);
  EXPECT_EQ(cfl_dt(phi, constant_velocity({0, 0}), 0.0, 0.01, 0.25, 0.5, 0.7), 0.7);
  // Pure reinitialization speed: |grad phi| = 1 everywhere and sign_h nonzero away from the interface.
  EXPECT_NEAR(cfl_dt(phi, constant_velocity({0, 0}), 0.05, 0.001, 0.25, 0.5, 1.0), 0.25 * 0.01 / 0.05, 1e-12);
}

namespace {

/// Largest per-step excursion of nodal values outside the previous step's range for a rotating
/// clamped cone, with exact inflow data on the inflow part of the boundary.
double rotation_overshoot(double c_lin) {
  const double h = 1.0 / 64, w = 0.05;
  auto s = q1_space({0, 1, 0, 1}, h);
  NumericalParams p;
  p.c_ent = 1e12;  // entropy viscosity never the minimum: linear viscosity only
  p.c_lambda = 0.0;
  p.c_lin = c_lin;
  auto phi0 = [w](const Vec2& q) { return std::clamp(0.25 - norm(q - Vec2{0.5, 0.7}), -w, w); };
  auto exact = [&](const Vec2& q, double t) {
    const Vec2 r = q - Vec2{0.5, 0.5};
    const double c = std::cos(t), sn = std::sin(t);
    return phi0({0.5 + c * r.x + sn * r.y, 0.5 - sn * r.x + c * r.y});
  };
  auto field = [](const Vec2& q) { return Vec2{0.5 - q.y, q.x - 0.5}; };
  InflowData inflow = [&](const Vec2& q, double t) -> std::optional<double> {
    Vec2 n{};
    if (q.x < 1e-12) n.x = -1;
    else if (q.x > 1 - 1e-12) n.x = 1;
    if (q.y < 1e-12) n.y = -1;
    else if (q.y > 1 - 1e-12) n.y = 1;
    if (dot(field(q), n) < 0) return exact(q, t);
    return std::nullopt;
  };
  LevelSetState st{fem::interpolate(s, phi0), h, 0.0};
  const auto u = VelocityField::from_function(field);
  levelset::MassCache cache;
  double t = 0.0, worst = 0.0;
  for (int n = 0; n < 40; ++n) {
    const double dt = cfl_dt(st.phi, u, 0.0, st.beta, p.c_cfl, p.c_s, 1.0);
    const double lo = st.phi.values().minCoeff(), hi = st.phi.values().maxCoeff();
    st = ssprk3_step(st, u, u, u, t, dt, p, inflow, &cache);
    t += dt;
    worst = std::max({worst, st.phi.values().maxCoeff() - hi, lo - st.phi.values().minCoeff()});
  }
  return worst;
}

}  // namespace

// Consistent-mass Galerkin with C_Lin = 0.1 has no strict discrete maximum principle; the
// linear viscosity must still damp the excursions of the unstabilized scheme.
TEST(Ssprk3Property, LinearViscosityReducesOvershoot) {
  const double stabilized = rotation_overshoot(0.1);
  const double galerkin = rotation_overshoot(0.0);
  EXPECT_GT(galerkin, 0.0);
  EXPECT_LT(stabilized, galerkin);
}

TEST(Ssprk3Property, ReinitializationEquilibriumAndSignPreservation) {
  const double h = 1.0 / 64;
  auto s = q1_space({0, 1, 0, 1}, h);
  const double beta = h;
  // Interface halfway between two node rows so no dof starts at zero.
  auto profile = [&](const Vec2& q) { return beta * std::tanh((q.y - 0.5 - 0.5 * h) / beta); };
  LevelSetState st{fem::interpolate(s, profile), beta, 0.05};
  const Field start = st.phi;
  const auto u = constant_velocity({0, 0});
  NumericalParams p;
  levelset::MassCache cache;
  for (int n = 0; n < 100; ++n) {
    const double dt = cfl_dt(st.phi, u, st.lambda, beta, p.c_cfl, p.c_s, 1.0);
    const Field before = st.phi;
    st = ssprk3_step(st, u, u, u, 0.0, dt, p, {}, &cache);
    for (int i = 0; i < s->n_dofs(); ++i)
      ASSERT_EQ(std::signbit(st.phi[i]), std::signbit(before[i])) << "dof " << i;
  }
  double change = 0.0;
  for (int i = 0; i < s->n_dofs(); ++i)
    if (sign_h(start[i], beta, p.c_s) != 0) change = std::max(change, std::abs(st.phi[i] - start[i]));
  EXPECT_LT(change, 0.05 * beta);
}
