#pragma once

#include <cmath>
#include <compare>

namespace levelflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm_l1(const Vec2& a) { return (a.x < 0 ? -a.x : a.x) + (a.y < 0 ? -a.y : a.y); }

/// 2x2 tensor stored row-major: (xx, xy; yx, yy). Row i holds the gradient of component i.
struct Tensor2 {
  double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;
  friend constexpr bool operator==(const Tensor2&, const Tensor2&) = default;
};

constexpr double contract(const Tensor2& a, const Tensor2& b) {
  return a.xx * b.xx + a.xy * b.xy + a.yx * b.yx + a.yy * b.yy;
}
constexpr double trace(const Tensor2& a) { return a.xx + a.yy; }
constexpr Tensor2 symmetric_part(const Tensor2& a) {
  const double off = 0.5 * (a.xy + a.yx);
  return {a.xx, off, off, a.yy};
}
constexpr Tensor2 operator*(const Tensor2& a, const Tensor2& b) {
  return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
          a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
}
inline double frobenius(const Tensor2& a) { return std::sqrt(contract(a, a)); }

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Extents {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  constexpr double width() const { return x1 - x0; }
  constexpr double height() const { return y1 - y0; }
  constexpr double area() const { return width() * height(); }
  constexpr Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  constexpr bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
  friend constexpr bool operator==(const Extents&, const Extents&) = default;
};

/// Domain sides, in the order used by every per-side array in the library.
enum class Side { left = 0, right = 1, bottom = 2, top = 3 };
inline constexpr int kNumSides = 4;

}  // namespace levelflow
