#include "levelflow/fem/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <unsupported/Eigen/IterativeSolvers>
#include <cmath>

#include "levelflow/error.hpp"

namespace levelflow::fem {

bool has_constant_nullspace(const SparseMatrix& A) {
  if (A.rows() == 0) return false;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(A.cols());
  const Eigen::VectorXd r = A * ones;
  double scale = 0.0;
  for (Eigen::Index k = 0; k < A.nonZeros(); ++k) scale = std::max(scale, std::abs(A.valuePtr()[k]));
  return r.lpNorm<Eigen::Infinity>() <= 1e-10 * scale;
}

namespace {

template <class Solver>
Eigen::VectorXd run(Solver& solver, const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iter,
                    const Eigen::VectorXd* guess, SolveStats* stats, const char* name) {
  SolveStats local;
  if (b.norm() == 0.0) {
    if (stats) *stats = local;
    return Eigen::VectorXd::Zero(A.rows());
  }
  solver.setTolerance(tol);
  solver.setMaxIterations(max_iter);
  solver.compute(A);
  Eigen::VectorXd x;
  if (guess && guess->size() == b.size())
    x = solver.solveWithGuess(b, *guess);
  else
    x = solver.solve(b);
  local.iterations = solver.iterations();
  local.residual = (A * x - b).norm() / b.norm();
  if (solver.info() != Eigen::Success && local.residual > tol)
    throw SolverError(std::string(name) + " did not converge", local.residual, local.iterations);
  if (stats) *stats = local;
  return x;
}

}  // namespace

Eigen::VectorXd solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iter,
                          const Eigen::VectorXd* guess, SolveStats* stats, const Eigen::VectorXd* mean_weights) {
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  if (!has_constant_nullspace(A)) return run(cg, A, b, tol, max_iter, guess, stats, "conjugate gradients");
  Eigen::VectorXd rhs, x;
  if (mean_weights) {
    const Eigen::VectorXd& w = *mean_weights;
    const double total = w.sum();
    rhs = b - (b.sum() / total) * w;
    x = run(cg, A, rhs, tol, max_iter, guess, stats, "conjugate gradients");
    x.array() -= w.dot(x) / total;
  } else {
    rhs = b.array() - b.mean();
    x = run(cg, A, rhs, tol, max_iter, guess, stats, "conjugate gradients");
    x.array() -= x.mean();
  }
  if (stats) stats->pinned = true;
  return x;
}

Eigen::VectorXd solve_general(const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iter,
                              const Eigen::VectorXd* guess, SolveStats* stats) {
  Eigen::GMRES<SparseMatrix, Eigen::DiagonalPreconditioner<double>> gmres;
  gmres.set_restart(50);
  return run(gmres, A, b, tol, max_iter, guess, stats, "GMRES");
}

}  // namespace levelflow::fem
