#pragma once

#include "parest/geometry.hpp"

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace parest {

struct QPoint1D {
  double x;
  double w;
};

namespace detail {

/// Legendre P_m and P_m' at x via the three-term recurrence.
inline std::pair<double, double> legendre_with_deriv(int m, double x) {
  double p0 = 1.0, p1 = x;
  if (m == 0) return {1.0, 0.0};
  for (int k = 2; k <= m; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = m * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

/// Gauss-Legendre nodes/weights on (-1,1) by Newton iteration.
inline const std::vector<QPoint1D>& gauss_reference(int m) {
  static std::map<int, std::vector<QPoint1D>> cache;
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  if (m < 1) throw std::invalid_argument("gauss_reference: m >= 1 required");
  std::vector<QPoint1D> rule(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre_with_deriv(m, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, dp] = legendre_with_deriv(m, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[i] = {-std::abs(x), w};
    rule[m - 1 - i] = {std::abs(x), w};
  }
  if (m % 2 == 1) rule[m / 2].x = 0.0;
  return cache.emplace(m, std::move(rule)).first->second;
}

}  // namespace detail

/// m-point Gauss rule on (lo, hi): exact for polynomials of degree <= 2m-1,
/// positive weights summing to hi - lo.
inline std::vector<QPoint1D> gauss_points(double lo, double hi, int m) {
  const auto& ref = detail::gauss_reference(m);
  std::vector<QPoint1D> out(ref.size());
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < ref.size(); ++i) out[i] = {mid + half * ref[i].x, half * ref[i].w};
  return out;
}

/// Quadrature on the reference triangle {l >= 0, sum l = 1}, stored in
/// barycentric coordinates with weights summing to 1 (reference area 1/2 folded
/// into the physical mapping). Built by the Duffy collapse of a tensor Gauss
/// rule, exact for total degree <= `degree`.
struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weight;  // sums to 1
};

inline const TriangleRule& triangle_rule(int degree) {
  static std::map<int, TriangleRule> cache;
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;
  // Duffy map x = u(1-v), y = v multiplies the v-degree by one and adds the
  // Jacobian factor (1-v), so m Gauss points per direction need 2m-1 >= d+1.
  const int m = (degree + 3) / 2;
  const auto gu = gauss_points(0.0, 1.0, m);
  const auto gv = gauss_points(0.0, 1.0, m);
  TriangleRule rule;
  rule.bary.reserve(m * m);
  rule.weight.reserve(m * m);
  double wsum = 0.0;
  for (const auto& pu : gu)
    for (const auto& pv : gv) {
      const double x = pu.x * (1.0 - pv.x), y = pv.x;
      const double w = pu.w * pv.w * (1.0 - pv.x);
      rule.bary.push_back({1.0 - x - y, x, y});
      rule.weight.push_back(w);
      wsum += w;
    }
  // normalize away roundoff so weights sum to exactly the reference measure
  for (auto& w : rule.weight) w *= 0.5 / wsum;
  for (auto& w : rule.weight) w *= 2.0;  // stored relative to unit total
  return cache.emplace(degree, std::move(rule)).first->second;
}

/// Apply `fn(x, w)` over the physical quadrature points of triangle (a,b,c).
template <class Fn>
inline void for_each_quadrature_point(const Vec2& a, const Vec2& b, const Vec2& c, int degree,
                                      Fn&& fn) {
  const TriangleRule& rule = triangle_rule(degree);
  const double area = std::abs(signed_area(a, b, c));
  for (std::size_t i = 0; i < rule.bary.size(); ++i) {
    const auto& l = rule.bary[i];
    const Vec2 x = l[0] * a + l[1] * b + l[2] * c;
    fn(x, rule.weight[i] * area);
  }
}

}  // namespace parest
