#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "levelflow/error.hpp"
#include "levelflow/fem/assembly.hpp"
#include "levelflow/fem/field.hpp"
#include "levelflow/fem/solvers.hpp"
#include "levelflow/fem/transfer.hpp"
#include "test_helpers.hpp"

using namespace levelflow;
using namespace levelflow::fem;

namespace {

std::shared_ptr<const QuadMesh> hanging_mesh() {
  return test_support::adapted_mesh({0, 1, 0, 1}, 0.125, 2,
                               [](const Vec2& p) { return test_support::circle_distance(p, {0.4, 0.55}, 0.27); }, 0.04);
}

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A); }

}  // namespace

TEST(Assembly, SingleCellMassRowsSumToQuarter) {
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 1, 0, 1}, 1.0));
  auto space = std::make_shared<const FESpace>(mesh, 1, 1);
  const auto M = dense(mass_matrix(*space));
  ASSERT_EQ(M.rows(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(M.row(i).sum(), 0.25, 1e-15);
  const auto K = dense(stiffness_matrix(*space));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(K.row(i).sum(), 0.0, 1e-15);
}

TEST(Assembly, HangingMeshMassSumsToArea) {
  auto mesh = hanging_mesh();
  for (int degree : {1, 2}) {
    auto space = std::make_shared<const FESpace>(mesh, degree, 1);
    EXPECT_FALSE(space->hanging_dofs().empty());
    const auto M = mass_matrix(*space);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(space->n_free());
    EXPECT_NEAR(ones.dot(M * ones), 1.0, 1e-12);
    const auto K = stiffness_matrix(*space);
    EXPECT_LT((K * ones).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_TRUE(has_constant_nullspace(K));
  }
}

TEST(Assembly, DeterministicOperators) {
  auto mesh = hanging_mesh();
  auto space = std::make_shared<const FESpace>(mesh, 2, 1);
  const auto A = stiffness_matrix(*space);
  const auto B = stiffness_matrix(*space);
  ASSERT_EQ(A.nonZeros(), B.nonZeros());
  for (Eigen::Index k = 0; k < A.nonZeros(); ++k) EXPECT_EQ(A.valuePtr()[k], B.valuePtr()[k]);
}

TEST(SolveSpd, IdentityReturnsRhs) {
  SparseMatrix I(5, 5);
  I.setIdentity();
  Eigen::VectorXd b(5);
  b << 1, -2, 3, 0.5, 7;
  EXPECT_LT((solve_spd(I, b, 1e-12, 10) - b).norm(), 1e-14);
}

TEST(SolveSpd, OneDimensionalPoissonAgainstDenseSolve) {
  Eigen::MatrixXd D(3, 3);
  D << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  const SparseMatrix A = D.sparseView();
  Eigen::VectorXd b(3);
  b << 1, 0, 1;
  const Eigen::VectorXd oracle = D.partialPivLu().solve(b);
  EXPECT_LT((solve_spd(A, b, 1e-12, 100) - oracle).norm(), 1e-10);
  EXPECT_NEAR(oracle[0], 1.0, 1e-14);
  EXPECT_NEAR(oracle[1], 1.0, 1e-14);
}

TEST(SolveSpd, PureNeumannGivesMeanZeroSolution) {
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 1, 0, 1}, 0.125));
  auto space = std::make_shared<const FESpace>(mesh, 1, 1);
  const auto K = stiffness_matrix(*space);
  Eigen::VectorXd b(space->n_free());
  for (int i = 0; i < b.size(); ++i) b[i] = std::sin(1.0 + i);
  b.array() -= b.mean();
  SolveStats stats;
  const auto x = solve_spd(K, b, 1e-10, 1000, nullptr, &stats);
  EXPECT_TRUE(stats.pinned);
  EXPECT_NEAR(x.mean(), 0.0, 1e-12);
  EXPECT_LT((K * x - b).norm() / b.norm(), 1e-9);
}

TEST(SolveSpd, ReportsNonConvergence) {
  auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 1, 0, 1}, 0.0625));
  auto space = std::make_shared<const FESpace>(mesh, 1, 1, all_boundary_mask());
  const auto K = stiffness_matrix(*space);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(space->n_free());
  try {
    solve_spd(K, b, 1e-12, 2);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 1e-12);
  }
}

TEST(SolveGeneral, IdentityDiagonalAndAdvectionDiffusion) {
  SparseMatrix I(4, 4);
  I.setIdentity();
  Eigen::VectorXd b(4);
  b << 1, 2, 3, 4;
  EXPECT_LT((solve_general(I, b, 1e-12, 100) - b).norm(), 1e-14);
  SparseMatrix D = I * 2.0;
  D.coeffRef(3, 3) = 8.0;
  Eigen::VectorXd expect(4);
  expect << 0.5, 1, 1.5, 0.5;
  EXPECT_LT((solve_general(D, b, 1e-12, 100) - expect).norm(), 1e-12);

  const int n = 40;
  const double h = 1.0 / (n + 1), eps = 0.05, vel = 1.0;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2 * eps / (h * h);
    if (i > 0) A(i, i - 1) = -eps / (h * h) - vel / (2 * h);
    if (i + 1 < n) A(i, i + 1) = -eps / (h * h) + vel / (2 * h);
  }
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd oracle = A.partialPivLu().solve(rhs);
  const Eigen::VectorXd x = solve_general(A.sparseView(), rhs, 1e-13, 1000);
  EXPECT_LT((x - oracle).norm() / oracle.norm(), 1e-9);
}

TEST(Field, InterpolateEvaluateIntegrate) {
  auto mesh = hanging_mesh();
  auto q2 = std::make_shared<const FESpace>(mesh, 2, 1);
  const auto f = interpolate(q2, [](const Vec2& p) { return p.x * p.x; });
  EXPECT_NEAR(evaluate(f, {0.3, 0.7}), 0.09, 1e-12);
  auto q1 = std::make_shared<const FESpace>(mesh, 1, 1);
  EXPECT_NEAR(integrate(interpolate(q1, [](const Vec2&) { return 1.0; })), 1.0, 1e-13);
  EXPECT_NEAR(integrate(f), 1.0 / 3.0, 1e-13);
  EXPECT_THROW(evaluate(f, {1.2, 0.5}), MeshError);
}

TEST(Field, HangingNodeValueIsConstraintCombination) {
  auto mesh = hanging_mesh();
  for (int degree : {1, 2}) {
    auto space = std::make_shared<const FESpace>(mesh, degree, 1);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    Field f(space);
    for (int i = 0; i < space->n_dofs(); ++i) f[i] = u(rng);
    f.distribute();
    for (int h : space->hanging_dofs()) {
      double combo = 0.0;
      for (const auto& t : space->hanging_masters(h)) combo += t.weight * f[t.target];
      EXPECT_NEAR(f[h], combo, 1e-14);
      EXPECT_NEAR(evaluate(f, space->node_point(h)), f[h], 1e-12);
    }
  }
}

TEST(FieldProperty, QuadraticVectorFieldsReproducedOnAdaptedMesh) {
  auto mesh = hanging_mesh();
  auto space = std::make_shared<const FESpace>(mesh, 2, 2);
  auto g = [](const Vec2& p) { return Vec2{1 + 2 * p.x - p.y + p.x * p.y - 3 * p.y * p.y, p.x * p.x - 0.5 * p.y}; };
  const auto f = interpolate_vector(space, g);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 500; ++k) {
    const Vec2 p{u(rng), u(rng)};
    EXPECT_LT(norm(evaluate_vector(f, p) - g(p)), 1e-10);
  }
}

TEST(FieldProperty, DistributedFieldsAreContinuousAcrossFaces) {
  auto mesh = hanging_mesh();
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int degree : {1, 2}) {
    auto space = std::make_shared<const FESpace>(mesh, degree, 1);
    Field f(space);
    for (int i = 0; i < space->n_dofs(); ++i) f[i] = 2 * u(rng) - 1;
    f.distribute();
    double max_jump = 0.0;
    int samples = 0;
    while (samples < 1000) {
      const int k = static_cast<int>(u(rng) * mesh->size());
      const Cell& c = mesh->cell(k);
      // Sample the right or top face of the cell, against whichever leaf lies across.
      const bool vertical = u(rng) < 0.5;
      const double t = u(rng);
      const Vec2 p = vertical ? Vec2{c.box.x1, c.box.y0 + t * c.hy()} : Vec2{c.box.x0 + t * c.hx(), c.box.y1};
      const Vec2 across = vertical ? Vec2{p.x + 1e-9, p.y} : Vec2{p.x, p.y + 1e-9};
      if (!mesh->domain().contains(across)) continue;
      const int other = mesh->locate(across);
      const Cell& o = mesh->cell(other);
      const Vec2 ref_self = vertical ? Vec2{1.0, t} : Vec2{t, 1.0};
      const Vec2 ref_other{std::clamp((p.x - o.box.x0) / o.hx(), 0.0, 1.0),
                           std::clamp((p.y - o.box.y0) / o.hy(), 0.0, 1.0)};
      const double jump = std::abs(evaluate_in_cell(f, k, ref_self) - evaluate_in_cell(f, other, ref_other));
      max_jump = std::max(max_jump, jump);
      ++samples;
    }
    EXPECT_LT(max_jump, 1e-10) << "degree " << degree;
  }
}

TEST(Transfer, ConstantsLinearsAndRoundTrip) {
  auto coarse = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 1, 0, 1}, 0.125));
  auto q1 = std::make_shared<const FESpace>(coarse, 1, 1);
  auto phi = interpolate(q1, [](const Vec2& p) { return test_support::circle_distance(p, {0.5, 0.5}, 0.3); });
  auto [refined_mesh, rep] = fem::adapt(*coarse, phi, 0.05, 2, 2, 2);
  ASSERT_GT(rep.n_refined, 0);
  auto fine = std::make_shared<const QuadMesh>(refined_mesh);

  for (int degree : {1, 2}) {
    auto s_old = std::make_shared<const FESpace>(coarse, degree, 1);
    auto s_new = std::make_shared<const FESpace>(fine, degree, 1);
    const auto c = transfer_field(interpolate(s_old, [](const Vec2&) { return 3.5; }), s_new);
    EXPECT_LT((c.values().array() - 3.5).abs().maxCoeff(), 1e-14);
    const auto lin = transfer_field(interpolate(s_old, [](const Vec2& p) { return p.x + p.y; }), s_new);
    for (int n = 0; n < s_new->n_nodes(); ++n) {
      const Vec2 p = s_new->node_point(n);
      EXPECT_NEAR(lin[n], p.x + p.y, 1e-12);
    }
  }

  // Random Q1 field: refine then coarsen the same cells restores the nodal values.
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Field rnd(q1);
  for (int i = 0; i < q1->n_dofs(); ++i) rnd[i] = u(rng);
  auto q1_fine = std::make_shared<const FESpace>(fine, 1, 1);
  const auto up = transfer_field(rnd, q1_fine);
  std::vector<double> far(fine->size(), 1.0);
  auto [back_mesh, rep2] = levelflow::adapt(*fine, far, 0.05, 2, 2, 2);
  EXPECT_EQ(back_mesh.size(), coarse->size());
  auto q1_back = std::make_shared<const FESpace>(std::make_shared<const QuadMesh>(back_mesh), 1, 1);
  const auto down = transfer_field(up, q1_back);
  ASSERT_EQ(down.values().size(), rnd.values().size());
  for (int n = 0; n < q1_back->n_nodes(); ++n) {
    const int o = q1->find_node(q1_back->node_key(n));
    ASSERT_GE(o, 0);
    EXPECT_EQ(down[n], rnd[o]);
  }

  auto other = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 1, 0, 1}, 0.25));
  EXPECT_THROW(transfer_field(rnd, std::make_shared<const FESpace>(other, 1, 1)), MeshError);
}
