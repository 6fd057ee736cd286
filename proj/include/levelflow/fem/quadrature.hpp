#pragma once

#include <vector>

#include "levelflow/geometry.hpp"

namespace levelflow::fem {

/// Tensor-product Gauss rule on the reference square [0,1]^2.
struct QuadRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int n_1d = 0;

  std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre rule with n points per direction, exact for degree 2n-1 per direction.
const QuadRule& gauss(int n);

/// Uniform sub-sampling rule: the midpoints of an n x n split of the reference square.
QuadRule midpoint_rule(int n);

/// 1D Lagrange basis on equispaced nodes {0, 1/d, ..., 1} of degree d in {1,2}.
double lagrange_1d(int degree, int a, double t);
double lagrange_1d_derivative(int degree, int a, double t);

}  // namespace levelflow::fem
