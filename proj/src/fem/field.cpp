#include "levelflow/fem/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace levelflow::fem {

Field::Field(std::shared_ptr<const FESpace> space)
    : space_(std::move(space)), values_(Eigen::VectorXd::Zero(space_->n_dofs())) {}

Field::Field(std::shared_ptr<const FESpace> space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (values_.size() != space_->n_dofs()) throw std::invalid_argument("field size does not match its space");
}

void Field::distribute() {
  const auto& s = *space_;
  for (int dof : s.hanging_dofs()) {
    double v = 0.0;
    for (const auto& t : s.expansion(dof))
      v += t.weight * values_[t.target >= 0 ? s.free_dof(t.target) : -t.target - 1];
    values_[dof] = v;
  }
}

void Field::cell_values(int cell, double* out) const {
  const auto& s = *space_;
  const int npc = s.nodes_per_cell();
  const int nc = s.components();
  const auto nodes = s.cell_nodes(cell);
  for (int c = 0; c < nc; ++c)
    for (int a = 0; a < npc; ++a) out[c * npc + a] = values_[nodes[a] * nc + c];
}

Field interpolate(std::shared_ptr<const FESpace> space, const std::function<double(const Vec2&)>& f) {
  Field out(space);
  for (int n = 0; n < space->n_nodes(); ++n) out[n * space->components()] = f(space->node_point(n));
  out.distribute();
  return out;
}

Field interpolate_vector(std::shared_ptr<const FESpace> space, const std::function<Vec2(const Vec2&)>& f) {
  if (space->components() != 2) throw std::invalid_argument("vector interpolation needs a 2-component space");
  Field out(space);
  for (int n = 0; n < space->n_nodes(); ++n) {
    const Vec2 v = f(space->node_point(n));
    out[2 * n] = v.x;
    out[2 * n + 1] = v.y;
  }
  out.distribute();
  return out;
}

namespace {

Vec2 reference_point(const Cell& c, const Vec2& p) {
  return {std::clamp((p.x - c.box.x0) / c.hx(), 0.0, 1.0), std::clamp((p.y - c.box.y0) / c.hy(), 0.0, 1.0)};
}

}  // namespace

double evaluate_in_cell(const Field& field, int cell, const Vec2& ref, int component) {
  const auto& s = field.space();
  const auto nodes = s.cell_nodes(cell);
  double v = 0.0;
  for (int a = 0; a < s.nodes_per_cell(); ++a)
    v += field[nodes[a] * s.components() + component] * shape_value(s.degree(), a, ref);
  return v;
}

double evaluate(const Field& field, const Vec2& p, int component) {
  const int cell = field.space().mesh().locate(p);
  return evaluate_in_cell(field, cell, reference_point(field.space().mesh().cell(cell), p), component);
}

Vec2 evaluate_vector(const Field& field, const Vec2& p) {
  const int cell = field.space().mesh().locate(p);
  const Vec2 ref = reference_point(field.space().mesh().cell(cell), p);
  return {evaluate_in_cell(field, cell, ref, 0), evaluate_in_cell(field, cell, ref, 1)};
}

Vec2 evaluate_gradient(const Field& field, const Vec2& p, int component) {
  const auto& s = field.space();
  const int cell = s.mesh().locate(p);
  const Cell& c = s.mesh().cell(cell);
  const Vec2 ref = reference_point(c, p);
  const auto nodes = s.cell_nodes(cell);
  Vec2 g;
  for (int a = 0; a < s.nodes_per_cell(); ++a)
    g += field[nodes[a] * s.components() + component] * shape_ref_grad(s.degree(), a, ref);
  return {g.x / c.hx(), g.y / c.hy()};
}

double integrate(const Field& field, int component) {
  const auto& s = field.space();
  FEValues fe(s.degree(), gauss(s.degree() + 1));
  std::vector<double> local(s.dofs_per_cell());
  double sum = 0.0;
  for (std::size_t k = 0; k < s.mesh().size(); ++k) {
    fe.reinit(s.mesh().cell(k));
    field.cell_values(static_cast<int>(k), local.data());
    for (std::size_t q = 0; q < fe.n_points(); ++q) sum += value_at(fe, local.data(), q, component) * fe.JxW(q);
  }
  return sum;
}

double integrate(const QuadMesh& mesh, const std::function<double(const Vec2&)>& f, int n_gauss) {
  const QuadRule& rule = gauss(n_gauss);
  double sum = 0.0;
  for (const auto& c : mesh.cells())
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x{c.box.x0 + c.hx() * rule.points[q].x, c.box.y0 + c.hy() * rule.points[q].y};
      sum += f(x) * rule.weights[q] * c.area();
    }
  return sum;
}

double l2_error(const Field& field, const std::function<double(const Vec2&)>& f, int n_gauss) {
  const auto& s = field.space();
  FEValues fe(s.degree(), gauss(n_gauss));
  std::vector<double> local(s.dofs_per_cell());
  double sum = 0.0;
  for (std::size_t k = 0; k < s.mesh().size(); ++k) {
    fe.reinit(s.mesh().cell(k));
    field.cell_values(static_cast<int>(k), local.data());
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const double e = value_at(fe, local.data(), q) - f(fe.point(q));
      sum += e * e * fe.JxW(q);
    }
  }
  return std::sqrt(sum);
}

double l2_error_vector(const Field& field, const std::function<Vec2(const Vec2&)>& f, int n_gauss) {
  const auto& s = field.space();
  FEValues fe(s.degree(), gauss(n_gauss));
  std::vector<double> local(s.dofs_per_cell());
  double sum = 0.0;
  for (std::size_t k = 0; k < s.mesh().size(); ++k) {
    fe.reinit(s.mesh().cell(k));
    field.cell_values(static_cast<int>(k), local.data());
    for (std::size_t q = 0; q < fe.n_points(); ++q) {
      const Vec2 e = vector_at(fe, local.data(), q) - f(fe.point(q));
      sum += dot(e, e) * fe.JxW(q);
    }
  }
  return std::sqrt(sum);
}

std::vector<double> barycenter_values(const Field& field) {
  std::vector<double> out(field.space().mesh().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = evaluate_in_cell(field, static_cast<int>(k), {0.5, 0.5});
  return out;
}

}  // namespace levelflow::fem
