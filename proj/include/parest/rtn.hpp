#pragma once

#include "parest/mesh.hpp"
#include "parest/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace parest {

/// Scaled monomial helpers on a local element frame (centroid, diameter).
/// Basis ordering: lexicographic by total degree, then by y-power:
/// 1, x, y, x^2, xy, y^2, ...
namespace monomial {

inline int count(int degree) { return (degree + 1) * (degree + 2) / 2; }

inline void values(int degree, const Vec2& xhat, std::vector<double>& out) {
  out.resize(count(degree));
  int idx = 0;
  for (int d = 0; d <= degree; ++d)
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      double v = 1.0;
      for (int k = 0; k < i; ++k) v *= xhat.x();
      for (int k = 0; k < j; ++k) v *= xhat.y();
      out[idx++] = v;
    }
}

inline int index_of(int i, int j) {
  const int d = i + j;
  return d * (d + 1) / 2 + j;
}

inline std::pair<int, int> powers_of(int idx) {
  int d = 0;
  while ((d + 1) * (d + 2) / 2 <= idx) ++d;
  const int j = idx - d * (d + 1) / 2;
  return {d - j, j};
}

}  // namespace monomial

/// Raviart-Thomas-Nedelec element of order p on a physical triangle,
/// RTN_p = P_p^2 + x P_p, built as the dual basis of the standard moments:
/// per edge the p+1 normal moments against Legendre polynomials in the global
/// lo->hi arclength parameter, then the p(p+1) interior moments against
/// P_{p-1}^2. Edge moments are triangle-independent, so shared coefficients
/// across an edge give an H(div)-conforming field.
class RTNElement {
 public:
  RTNElement(const std::array<Vec2, 3>& coords, const std::array<int, 3>& global_vertices, int p)
      : coords_(coords), degree_(p) {
    center_ = (coords[0] + coords[1] + coords[2]) / 3.0;
    scale_ = triangle_diameter(coords[0], coords[1], coords[2]);
    const int np = monomial::count(p);
    n_span_ = 2 * np + (p + 1);
    n_edge_dofs_ = p + 1;
    n_interior_dofs_ = p * (p + 1);
    n_ = 3 * n_edge_dofs_ + n_interior_dofs_;

    for (int k = 0; k < 3; ++k) {
      const int a = k, b = (k + 1) % 3;
      edge_flip_[k] = global_vertices[a] > global_vertices[b];
    }

    Eigen::MatrixXd dof_matrix = Eigen::MatrixXd::Zero(n_, n_span_);
    // edge moments
    for (int k = 0; k < 3; ++k) {
      const Vec2 pa = edge_flip_[k] ? coords[(k + 1) % 3] : coords[k];
      const Vec2 pb = edge_flip_[k] ? coords[k] : coords[(k + 1) % 3];
      const Vec2 t = (pb - pa).normalized();
      const Vec2 n(t.y(), -t.x());
      const double len = (pb - pa).norm();
      for (const auto& gp : gauss_points(-1.0, 1.0, p + 2)) {
        const Vec2 x = 0.5 * (1.0 - gp.x) * pa + 0.5 * (1.0 + gp.x) * pb;
        Eigen::MatrixXd sv(n_span_, 2);
        span_values(x, sv);
        for (int j = 0; j <= p; ++j) {
          const double wj = gp.w * 0.5 * len * legendre_poly(j, gp.x);
          for (int s = 0; s < n_span_; ++s)
            dof_matrix(k * n_edge_dofs_ + j, s) += wj * (sv(s, 0) * n.x() + sv(s, 1) * n.y());
        }
      }
    }
    // interior moments against P_{p-1}^2 (scaled monomials)
    if (p >= 1) {
      const int nq = monomial::count(p - 1);
      std::vector<double> mono;
      for_each_quadrature_point(coords[0], coords[1], coords[2], 2 * p + 2,
                                [&](const Vec2& x, double w) {
                                  Eigen::MatrixXd sv(n_span_, 2);
                                  span_values(x, sv);
                                  monomial::values(p - 1, local(x), mono);
                                  for (int m = 0; m < nq; ++m)
                                    for (int s = 0; s < n_span_; ++s) {
                                      dof_matrix(3 * n_edge_dofs_ + 2 * m, s) += w * mono[m] * sv(s, 0);
                                      dof_matrix(3 * n_edge_dofs_ + 2 * m + 1, s) += w * mono[m] * sv(s, 1);
                                    }
                                });
    }
    dual_ = dof_matrix.partialPivLu().inverse();
  }

  int degree() const { return degree_; }
  int n_basis() const { return n_; }
  int n_edge_dofs() const { return n_edge_dofs_; }
  int n_interior_dofs() const { return n_interior_dofs_; }
  const Vec2& center() const { return center_; }
  double scale() const { return scale_; }
  const std::array<Vec2, 3>& coords() const { return coords_; }

  /// Local dof index of Legendre moment j on local edge k.
  int edge_dof(int k, int j) const { return k * n_edge_dofs_ + j; }
  int interior_dof(int m) const { return 3 * n_edge_dofs_ + m; }

  /// Values of all n basis fields at x: rows are basis, columns (x,y).
  void basis_values(const Vec2& x, Eigen::MatrixXd& out) const {
    Eigen::MatrixXd sv(n_span_, 2);
    span_values(x, sv);
    out.noalias() = dual_.transpose() * sv;
  }

  /// Divergences of all n basis fields at x.
  void basis_divergences(const Vec2& x, Eigen::VectorXd& out) const {
    Eigen::VectorXd sd(n_span_);
    span_divergences(x, sd);
    out.noalias() = dual_.transpose() * sd;
  }

  /// Monomial representation (degree p+1 per component, element frame) of the
  /// field with dual-basis coefficients c.
  void to_monomials(const Eigen::VectorXd& c, Eigen::VectorXd& mx, Eigen::VectorXd& my) const {
    const int p = degree_;
    const int np1 = monomial::count(p + 1);
    const int np = monomial::count(p);
    mx = Eigen::VectorXd::Zero(np1);
    my = Eigen::VectorXd::Zero(np1);
    const Eigen::VectorXd s = dual_ * c;  // spanning coefficients
    for (int m = 0; m < np; ++m) {
      const auto [i, j] = monomial::powers_of(m);
      mx[monomial::index_of(i, j)] += s[m];
      my[monomial::index_of(i, j)] += s[np + m];
    }
    for (int r = 0; r <= p; ++r) {
      // radial field xhat * x^(p-r) y^r
      const double cr = s[2 * np + r];
      mx[monomial::index_of(p - r + 1, r)] += cr;
      my[monomial::index_of(p - r, r + 1)] += cr;
    }
  }

  Vec2 local(const Vec2& x) const { return (x - center_) / scale_; }

 private:
  static double legendre_poly(int q, double x) {
    double p0 = 1.0, p1 = x;
    if (q == 0) return 1.0;
    for (int k = 2; k <= q; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return p1;
  }

  void span_values(const Vec2& x, Eigen::MatrixXd& out) const {
    const Vec2 xh = local(x);
    const int p = degree_;
    const int np = monomial::count(p);
    std::vector<double> mono;
    monomial::values(p, xh, mono);
    out.setZero(n_span_, 2);
    for (int m = 0; m < np; ++m) {
      out(m, 0) = mono[m];
      out(np + m, 1) = mono[m];
    }
    for (int r = 0; r <= p; ++r) {
      const double m = mono[monomial::index_of(p - r, r)];
      out(2 * np + r, 0) = xh.x() * m;
      out(2 * np + r, 1) = xh.y() * m;
    }
  }

  void span_divergences(const Vec2& x, Eigen::VectorXd& out) const {
    const Vec2 xh = local(x);
    const int p = degree_;
    const int np = monomial::count(p);
    std::vector<double> mono;
    monomial::values(p, xh, mono);
    out.setZero(n_span_);
    for (int m = 0; m < np; ++m) {
      const auto [i, j] = monomial::powers_of(m);
      out[m] = i > 0 ? (i / scale_) * mono[monomial::index_of(i - 1, j)] : 0.0;
      out[np + m] = j > 0 ? (j / scale_) * mono[monomial::index_of(i, j - 1)] : 0.0;
    }
    for (int r = 0; r <= p; ++r)
      out[2 * np + r] = ((p + 2.0) / scale_) * mono[monomial::index_of(p - r, r)];
  }

  std::array<Vec2, 3> coords_;
  int degree_;
  Vec2 center_;
  double scale_;
  int n_span_ = 0, n_ = 0, n_edge_dofs_ = 0, n_interior_dofs_ = 0;
  std::array<bool, 3> edge_flip_ = {false, false, false};
  Eigen::MatrixXd dual_;  // spanning coefficients of the dual basis (columns)
};

}  // namespace parest
