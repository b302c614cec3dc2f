#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace parest {

using Vec2 = Eigen::Vector2d;

/// Signed (CCW-positive) area of the triangle (a, b, c).
inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

inline double triangle_diameter(const Vec2& a, const Vec2& b, const Vec2& c) {
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

/// Circumradius R = abc / (4A).
inline double circumradius(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  return la * lb * lc / (4.0 * std::abs(signed_area(a, b, c)));
}

/// Inradius r = 2A / perimeter.
inline double inradius(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  return 2.0 * std::abs(signed_area(a, b, c)) / (la + lb + lc);
}

/// Barycentric coordinates of p with respect to (a, b, c); sums to 1.
inline std::array<double, 3> barycentric(const Vec2& a, const Vec2& b, const Vec2& c,
                                         const Vec2& p) {
  const double A = signed_area(a, b, c);
  return {signed_area(p, b, c) / A, signed_area(a, p, c) / A, signed_area(a, b, p) / A};
}

inline bool point_in_triangle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p,
                              double tol = 1e-12) {
  const auto l = barycentric(a, b, c, p);
  return l[0] >= -tol && l[1] >= -tol && l[2] >= -tol;
}

/// Gradients of the three barycentric coordinates; constant over the triangle.
inline std::array<Vec2, 3> barycentric_gradients(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double twoA = 2.0 * signed_area(a, b, c);
  // grad lambda_i is the inward-scaled normal of the opposite edge.
  return {Vec2((b.y() - c.y()) / twoA, (c.x() - b.x()) / twoA),
          Vec2((c.y() - a.y()) / twoA, (a.x() - c.x()) / twoA),
          Vec2((a.y() - b.y()) / twoA, (b.x() - a.x()) / twoA)};
}

/// Affine scalar field c0 + g.(x - x0); used for hat functions on coarse elements.
struct AffineScalar {
  double c0 = 0.0;
  Vec2 x0 = Vec2::Zero();
  Vec2 grad = Vec2::Zero();

  double operator()(const Vec2& x) const { return c0 + grad.dot(x - x0); }
};

}  // namespace parest
