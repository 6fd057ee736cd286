#include "levelflow/fem/assembly.hpp"

#include <algorithm>
#include <stdexcept>

namespace levelflow::fem {

SparseMatrix make_matrix(const FESpace& space) {
  const int n = space.n_free();
  const auto& ptr = space.pattern_row_ptr();
  const auto& cols = space.pattern_cols();
  std::vector<double> zeros(cols.size(), 0.0);
  SparseMatrix A = Eigen::Map<const SparseMatrix>(n, n, static_cast<Eigen::Index>(cols.size()), ptr.data(),
                                                  cols.data(), zeros.data());
  return A;
}

void clear_values(SparseMatrix& A) { std::fill(A.valuePtr(), A.valuePtr() + A.nonZeros(), 0.0); }

void add_entry(SparseMatrix& A, int row, int col, double v) {
  const int* begin = A.innerIndexPtr() + A.outerIndexPtr()[row];
  const int* end = A.innerIndexPtr() + A.outerIndexPtr()[row + 1];
  const int* it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) throw std::logic_error("matrix entry outside the sparsity pattern");
  A.valuePtr()[it - A.innerIndexPtr()] += v;
}

SystemAssembler::SystemAssembler(const FESpace& space, SparseMatrix* A, Eigen::VectorXd* b,
                                 const Eigen::VectorXd* dirichlet)
    : space_(space), A_(A), b_(b), g_(dirichlet), dofs_(space.dofs_per_cell()) {}

void SystemAssembler::add(int cell, const double* Ke, const double* fe) {
  const int n = space_.dofs_per_cell();
  for (int l = 0; l < n; ++l) dofs_[l] = space_.cell_dof(cell, l);
  for (int l = 0; l < n; ++l) {
    const auto el = space_.expansion(dofs_[l]);
    for (const auto& tl : el) {
      if (tl.target < 0) continue;
      if (fe && b_) (*b_)[tl.target] += tl.weight * fe[l];
      if (!Ke) continue;
      for (int m = 0; m < n; ++m) {
        const double k = Ke[l * n + m];
        if (k == 0.0) continue;
        for (const auto& tm : space_.expansion(dofs_[m])) {
          const double v = tl.weight * tm.weight * k;
          if (tm.target >= 0) {
            add_entry(*A_, tl.target, tm.target, v);
          } else if (b_ && g_) {
            (*b_)[tl.target] -= v * (*g_)[-tm.target - 1];
          }
        }
      }
    }
  }
}

SparseMatrix assemble_bilinear(const FESpace& space, const QuadRule& rule, const BilinearIntegrand& integrand) {
  if (space.components() != 1) throw std::invalid_argument("assemble_bilinear expects a scalar space");
  SparseMatrix A = make_matrix(space);
  assemble(
      space, rule,
      [&](int, const FEValues& fe, double* Ke, double*) {
        const int n = fe.n_shape();
        for (std::size_t q = 0; q < fe.n_points(); ++q)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) Ke[a * n + b] += integrand(fe, q, a, b);
      },
      &A, nullptr);
  return A;
}

SparseMatrix mass_matrix(const FESpace& space) {
  return assemble_bilinear(space, gauss(space.degree() + 1), [](const FEValues& fe, std::size_t q, int a, int b) {
    return fe.shape(q, a) * fe.shape(q, b) * fe.JxW(q);
  });
}

SparseMatrix stiffness_matrix(const FESpace& space) {
  return assemble_bilinear(space, gauss(space.degree() + 1), [](const FEValues& fe, std::size_t q, int a, int b) {
    return dot(fe.grad(q, a), fe.grad(q, b)) * fe.JxW(q);
  });
}

Eigen::VectorXd restrict_to_free(const FESpace& space, const Eigen::VectorXd& full) {
  Eigen::VectorXd r(space.n_free());
  for (int i = 0; i < space.n_free(); ++i) r[i] = full[space.free_dof(i)];
  return r;
}

Eigen::VectorXd expand(const FESpace& space, const Eigen::VectorXd& reduced, const Eigen::VectorXd* dirichlet) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(space.n_dofs());
  for (int i = 0; i < space.n_free(); ++i) full[space.free_dof(i)] = reduced[i];
  if (dirichlet)
    for (int d : space.dirichlet_dofs()) full[d] = (*dirichlet)[d];
  for (int h : space.hanging_dofs()) {
    double v = 0.0;
    for (const auto& t : space.expansion(h)) v += t.weight * (t.target >= 0 ? reduced[t.target] : full[-t.target - 1]);
    full[h] = v;
  }
  return full;
}

}  // namespace levelflow::fem
