#include "levelflow/fem/quadrature.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace levelflow::fem {

namespace {

QuadRule tensor(const std::vector<double>& x, const std::vector<double>& w) {
  QuadRule r;
  r.n_1d = static_cast<int>(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.points.push_back({x[i], x[j]});
      r.weights.push_back(w[i] * w[j]);
    }
  return r;
}

QuadRule make_gauss(int n) {
  // Nodes and weights on [-1,1], mapped to [0,1].
  std::vector<double> x, w;
  switch (n) {
    case 1:
      x = {0.0};
      w = {2.0};
      break;
    case 2:
      x = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
      w = {1.0, 1.0};
      break;
    case 3:
      x = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      x = {-b, -a, a, b};
      w = {wb, wa, wa, wb};
      break;
    }
    default:
      throw std::invalid_argument("Gauss rule with " + std::to_string(n) + " points not available");
  }
  for (auto& v : x) v = 0.5 * (v + 1.0);
  for (auto& v : w) v *= 0.5;
  return tensor(x, w);
}

}  // namespace

const QuadRule& gauss(int n) {
  static const std::array<QuadRule, 4> rules = {make_gauss(1), make_gauss(2), make_gauss(3), make_gauss(4)};
  if (n < 1 || n > 4) throw std::invalid_argument("Gauss rule with " + std::to_string(n) + " points not available");
  return rules[n - 1];
}

QuadRule midpoint_rule(int n) {
  std::vector<double> x(n), w(n, 1.0 / n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) / n;
  return tensor(x, w);
}

double lagrange_1d(int degree, int a, double t) {
  if (degree == 1) return a == 0 ? 1.0 - t : t;
  switch (a) {
    case 0: return 2.0 * (t - 0.5) * (t - 1.0);
    case 1: return -4.0 * t * (t - 1.0);
    default: return 2.0 * t * (t - 0.5);
  }
}

double lagrange_1d_derivative(int degree, int a, double t) {
  if (degree == 1) return a == 0 ? -1.0 : 1.0;
  switch (a) {
    case 0: return 4.0 * t - 3.0;
    case 1: return -8.0 * t + 4.0;
    default: return 4.0 * t - 1.0;
  }
}

}  // namespace levelflow::fem
