#pragma once

#include <Eigen/Core>

#include "levelflow/fem/assembly.hpp"

namespace levelflow::fem {

struct SolveStats {
  long iterations = 0;
  double residual = 0.0;
  bool pinned = false;
};

/// True when A annihilates the constant vector (pure Neumann operators).
bool has_constant_nullspace(const SparseMatrix& A);

/// Diagonally preconditioned conjugate gradients. Singular operators with a
/// constant null space get a compatible right-hand side and a mean-zero
/// solution; with `mean_weights` w (the integrals of the basis functions) the
/// load of a constant source is removed and w.x = 0, otherwise plain vector
/// means are used. Throws SolverError if the relative residual stays above tol.
Eigen::VectorXd solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iter,
                          const Eigen::VectorXd* guess = nullptr, SolveStats* stats = nullptr,
                          const Eigen::VectorXd* mean_weights = nullptr);

/// Restarted GMRES with diagonal preconditioning for nonsymmetric systems.
Eigen::VectorXd solve_general(const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iter,
                              const Eigen::VectorXd* guess = nullptr, SolveStats* stats = nullptr);

}  // namespace levelflow::fem
