#pragma once

#include <vector>

#include "levelflow/fem/fe_space.hpp"
#include "levelflow/fem/quadrature.hpp"

namespace levelflow::fem {

/// Scalar shape functions of one degree at the points of one rule, mapped to
/// a rectangular cell. Index [q * n + a].
class FEValues {
 public:
  FEValues(int degree, const QuadRule& rule);
  /// Shape functions evaluated at arbitrary reference points (weights unused).
  FEValues(int degree, const std::vector<Vec2>& ref_points);

  void reinit(const Cell& cell);

  int n_shape() const { return n_; }
  std::size_t n_points() const { return points_ref_.size(); }
  double shape(std::size_t q, int a) const { return val_[q * n_ + a]; }
  const Vec2& grad(std::size_t q, int a) const { return grad_[q * n_ + a]; }
  double JxW(std::size_t q) const { return jxw_[q]; }
  const Vec2& point(std::size_t q) const { return points_[q]; }
  const Vec2& ref_point(std::size_t q) const { return points_ref_[q]; }
  const Cell& cell() const { return *cell_; }

 private:
  int degree_;
  int n_;
  std::vector<Vec2> points_ref_;
  std::vector<double> weights_;
  std::vector<double> val_;
  std::vector<Vec2> ref_grad_;
  std::vector<Vec2> grad_;
  std::vector<double> jxw_;
  std::vector<Vec2> points_;
  const Cell* cell_ = nullptr;
};

/// Value and reference gradient of the tensor-product shape a = ix + (d+1) iy at ref point p.
double shape_value(int degree, int a, const Vec2& p);
Vec2 shape_ref_grad(int degree, int a, const Vec2& p);

}  // namespace levelflow::fem
