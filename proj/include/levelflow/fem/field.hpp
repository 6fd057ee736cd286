#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>

#include "levelflow/fem/fe_space.hpp"
#include "levelflow/fem/fe_values.hpp"

namespace levelflow::fem {

/// Nodal values of a (scalar or vector) finite-element function, one entry per global dof.
class Field {
 public:
  Field() = default;
  explicit Field(std::shared_ptr<const FESpace> space);
  Field(std::shared_ptr<const FESpace> space, Eigen::VectorXd values);

  const FESpace& space() const { return *space_; }
  const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int dof) const { return values_[dof]; }
  double& operator[](int dof) { return values_[dof]; }

  /// Overwrites hanging dofs with their constraint combinations.
  void distribute();
  /// Gathers the cell's dofs in local order.
  void cell_values(int cell, double* out) const;

 private:
  std::shared_ptr<const FESpace> space_;
  Eigen::VectorXd values_;
};

/// Scalar value and gradient at point q of `fe` from cell-local dofs of component c.
inline double value_at(const FEValues& fe, const double* local, std::size_t q, int c = 0) {
  const int n = fe.n_shape();
  double v = 0.0;
  for (int a = 0; a < n; ++a) v += local[c * n + a] * fe.shape(q, a);
  return v;
}
/// Shape gradients sum to zero, so values are taken relative to the first
/// one; locally constant fields then have an exactly zero gradient.
inline Vec2 grad_at(const FEValues& fe, const double* local, std::size_t q, int c = 0) {
  const int n = fe.n_shape();
  const double base = local[c * n];
  Vec2 g;
  for (int a = 1; a < n; ++a) g += (local[c * n + a] - base) * fe.grad(q, a);
  return g;
}
inline Vec2 vector_at(const FEValues& fe, const double* local, std::size_t q) {
  return {value_at(fe, local, q, 0), value_at(fe, local, q, 1)};
}
/// Row i holds the gradient of component i.
inline Tensor2 vector_grad_at(const FEValues& fe, const double* local, std::size_t q) {
  const Vec2 gx = grad_at(fe, local, q, 0);
  const Vec2 gy = grad_at(fe, local, q, 1);
  return {gx.x, gx.y, gy.x, gy.y};
}

Field interpolate(std::shared_ptr<const FESpace> space, const std::function<double(const Vec2&)>& f);
Field interpolate_vector(std::shared_ptr<const FESpace> space, const std::function<Vec2(const Vec2&)>& f);

double evaluate(const Field& field, const Vec2& p, int component = 0);
Vec2 evaluate_vector(const Field& field, const Vec2& p);
Vec2 evaluate_gradient(const Field& field, const Vec2& p, int component = 0);
/// Value at a reference point of a known cell.
double evaluate_in_cell(const Field& field, int cell, const Vec2& ref, int component = 0);

/// Integral of a scalar field (or one component) with exact Gauss quadrature.
double integrate(const Field& field, int component = 0);
/// Integral of a pointwise function with an n-point Gauss rule per direction on every cell.
double integrate(const QuadMesh& mesh, const std::function<double(const Vec2&)>& f, int n_gauss = 3);
/// L2 norm of field minus f.
double l2_error(const Field& field, const std::function<double(const Vec2&)>& f, int n_gauss = 4);
double l2_error_vector(const Field& field, const std::function<Vec2(const Vec2&)>& f, int n_gauss = 4);

/// Values at the barycenter of every cell.
std::vector<double> barycenter_values(const Field& field);

}  // namespace levelflow::fem
