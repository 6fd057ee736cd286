#include "levelflow/fem/fe_values.hpp"

namespace levelflow::fem {

double shape_value(int degree, int a, const Vec2& p) {
  const int ix = a % (degree + 1);
  const int iy = a / (degree + 1);
  return lagrange_1d(degree, ix, p.x) * lagrange_1d(degree, iy, p.y);
}

Vec2 shape_ref_grad(int degree, int a, const Vec2& p) {
  const int ix = a % (degree + 1);
  const int iy = a / (degree + 1);
  return {lagrange_1d_derivative(degree, ix, p.x) * lagrange_1d(degree, iy, p.y),
          lagrange_1d(degree, ix, p.x) * lagrange_1d_derivative(degree, iy, p.y)};
}

FEValues::FEValues(int degree, const QuadRule& rule) : FEValues(degree, rule.points) {
  weights_ = rule.weights;
}

FEValues::FEValues(int degree, const std::vector<Vec2>& ref_points)
    : degree_(degree), n_((degree + 1) * (degree + 1)), points_ref_(ref_points) {
  const std::size_t nq = points_ref_.size();
  weights_.assign(nq, 0.0);
  val_.resize(nq * n_);
  ref_grad_.resize(nq * n_);
  grad_.resize(nq * n_);
  jxw_.resize(nq);
  points_.resize(nq);
  for (std::size_t q = 0; q < nq; ++q)
    for (int a = 0; a < n_; ++a) {
      val_[q * n_ + a] = shape_value(degree_, a, points_ref_[q]);
      ref_grad_[q * n_ + a] = shape_ref_grad(degree_, a, points_ref_[q]);
    }
}

void FEValues::reinit(const Cell& cell) {
  cell_ = &cell;
  const double hx = cell.hx();
  const double hy = cell.hy();
  const double area = hx * hy;
  for (std::size_t q = 0; q < points_ref_.size(); ++q) {
    jxw_[q] = weights_[q] * area;
    points_[q] = {cell.box.x0 + hx * points_ref_[q].x, cell.box.y0 + hy * points_ref_[q].y};
    for (int a = 0; a < n_; ++a) {
      const Vec2& g = ref_grad_[q * n_ + a];
      grad_[q * n_ + a] = {g.x / hx, g.y / hy};
    }
  }
}

}  // namespace levelflow::fem
