#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "levelflow/fem/fe_space.hpp"
#include "levelflow/fem/fe_values.hpp"
#include "levelflow/fem/field.hpp"

namespace levelflow::fem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Zero matrix over the free dofs of `space` carrying its full sparsity pattern.
SparseMatrix make_matrix(const FESpace& space);
/// Sets every stored entry to zero, keeping the pattern.
void clear_values(SparseMatrix& A);
/// Adds v to the stored entry (row, col); the entry must be in the pattern.
void add_entry(SparseMatrix& A, int row, int col, double v);

/// Condenses cell contributions into the reduced system. Hanging dofs are
/// eliminated through their constraint expansions; Dirichlet contributions
/// move to the right-hand side using the values in `dirichlet` (a full dof vector).
class SystemAssembler {
 public:
  SystemAssembler(const FESpace& space, SparseMatrix* A, Eigen::VectorXd* b,
                  const Eigen::VectorXd* dirichlet = nullptr);

  /// Ke is dofs_per_cell^2 row-major (may be null); fe has dofs_per_cell entries (may be null).
  void add(int cell, const double* Ke, const double* fe);

 private:
  const FESpace& space_;
  SparseMatrix* A_;
  Eigen::VectorXd* b_;
  const Eigen::VectorXd* g_;
  std::vector<int> dofs_;
};

/// Loops over all cells, calling kernel(cell, fe, Ke, fe_rhs) with zeroed
/// local arrays, and condenses the result.
template <class Kernel>
void assemble(const FESpace& space, const QuadRule& rule, Kernel&& kernel, SparseMatrix* A, Eigen::VectorXd* b,
              const Eigen::VectorXd* dirichlet = nullptr) {
  if (A) clear_values(*A);
  if (b) b->setZero(space.n_free());
  SystemAssembler sys(space, A, b, dirichlet);
  FEValues fe(space.degree(), rule);
  const int n = space.dofs_per_cell();
  std::vector<double> Ke(A ? static_cast<std::size_t>(n) * n : 0);
  std::vector<double> fl(b ? n : 0);
  for (std::size_t k = 0; k < space.mesh().size(); ++k) {
    fe.reinit(space.mesh().cell(k));
    std::fill(Ke.begin(), Ke.end(), 0.0);
    std::fill(fl.begin(), fl.end(), 0.0);
    kernel(static_cast<int>(k), fe, A ? Ke.data() : nullptr, b ? fl.data() : nullptr);
    sys.add(static_cast<int>(k), A ? Ke.data() : nullptr, b ? fl.data() : nullptr);
  }
}

/// Integrand of a bilinear form for the scalar shape pair (a, b) at point q.
using BilinearIntegrand = std::function<double(const FEValues& fe, std::size_t q, int a, int b)>;

/// Scalar bilinear form assembled with the given rule.
SparseMatrix assemble_bilinear(const FESpace& space, const QuadRule& rule, const BilinearIntegrand& integrand);

/// Scalar mass and stiffness matrices with the coefficient 1.
SparseMatrix mass_matrix(const FESpace& space);
SparseMatrix stiffness_matrix(const FESpace& space);

/// Free-dof values of a full dof vector.
Eigen::VectorXd restrict_to_free(const FESpace& space, const Eigen::VectorXd& full);
/// Full dof vector from free values and Dirichlet data, with hanging dofs distributed.
Eigen::VectorXd expand(const FESpace& space, const Eigen::VectorXd& reduced,
                       const Eigen::VectorXd* dirichlet = nullptr);

}  // namespace levelflow::fem
