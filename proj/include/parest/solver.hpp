#pragma once

#include "parest/fespace.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <vector>

namespace parest {

using SpaceTimeFn = std::function<double(const Vec2&, double)>;

/// Space-time quadrature used for all data integrals of one step: the load
/// functional of the scheme and the patchwise data projections share these
/// exact points so the discrete identities hold to roundoff even when the
/// data is not a polynomial.
struct DataQuadrature {
  std::vector<QPoint1D> time_points;  // q_s + 3 Gauss points on I_s
  int space_degree;                   // triangle rule degree on overlay sub-elements
};

inline DataQuadrature data_quadrature(const Discretization& d, int s) {
  DataQuadrature rule;
  rule.time_points =
      gauss_points(d.partition.t(s), d.partition.t(s + 1), d.partition.degree(s) + 3);
  rule.space_degree = 2 * d.slabs[s].overlay_space->max_degree() + 4;
  return rule;
}

/// Loads F(i,k) = int_{I_s} L_k (f, phi_i) dt for the V^{s+1} basis, integrated
/// sub-element by sub-element on the overlay mesh.
inline Matrix assemble_load(const Discretization& d, int s, const SpaceTimeFn& f,
                            const DataQuadrature& rule) {
  const StepSlab& slab = d.slabs[s];
  const FESpace& sp = *slab.space;
  const int q = d.partition.degree(s);
  Matrix F = Matrix::Zero(sp.n_dofs(), q + 1);
  std::vector<double> phi;
  for (int e = 0; e < slab.overlay->n_elements(); ++e) {
    const int ce = slab.overlay_parent_cur[e];
    const auto cc = sp.mesh().element_coords(ce);
    const auto c = slab.overlay->element_coords(e);
    for (const auto& tp : rule.time_points) {
      std::vector<double> L(q + 1);
      for (int k = 0; k <= q; ++k) L[k] = legendre_eval(d.partition, s, k, tp.x);
      for_each_quadrature_point(c[0], c[1], c[2], rule.space_degree, [&](const Vec2& x, double w) {
        const auto l = barycentric(cc[0], cc[1], cc[2], x);
        sp.basis_values(ce, l, phi);
        const double fv = f(x, tp.x) * w * tp.w;
        for (std::size_t i = 0; i < phi.size(); ++i) {
          const int g = sp.local_to_global(ce, int(i));
          if (g < 0) continue;
          for (int k = 0; k <= q; ++k) F(g, k) += fv * phi[i] * L[k];
        }
      });
    }
  }
  return F;
}

/// Factorized dG(q) block system of one step. The blocks couple Legendre
/// modes: row k, column j carries C_kj M + delta_kj tau/(2k+1) A with
/// C_kj = int L_j' L_k dt + (-1)^{k+j} from the upwind jump term; the
/// right-hand side gets the loads plus (-1)^k (u(t_{s}), phi) pairings.
struct StepOperator {
  int q = 0;
  double tau = 0.0;
  std::shared_ptr<Eigen::SparseLU<SparseMat>> lu;
  SparseMat cross_mass;  // prolong_cur^T M~ prolong_prev : V^{s} -> V^{s+1} pairing

  Matrix solve(const Matrix& loads, const Vector& u_prev) const {
    const int n = int(loads.rows());
    Vector rhs(n * (q + 1));
    const Vector r_prev = cross_mass * u_prev;
    for (int k = 0; k <= q; ++k) {
      const double sk = (k % 2 == 0) ? 1.0 : -1.0;
      rhs.segment(k * n, n) = loads.col(k) + sk * r_prev;
    }
    const Vector sol = lu->solve(rhs);
    Matrix modes(n, q + 1);
    for (int k = 0; k <= q; ++k) modes.col(k) = sol.segment(k * n, n);
    return modes;
  }
};

inline StepOperator build_step_operator(const Discretization& d, int s) {
  const StepSlab& slab = d.slabs[s];
  const FESpace& sp = *slab.space;
  const int q = d.partition.degree(s);
  const double tau = d.partition.tau(s);
  const int n = sp.n_dofs();
  const SparseMat& M = sp.mass();
  const SparseMat& A = sp.stiffness();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(q + 1) * (q + 1) * M.nonZeros());
  auto add_block = [&](int k, int j, const SparseMat& B, double scale) {
    if (scale == 0.0) return;
    for (int col = 0; col < B.outerSize(); ++col)
      for (SparseMat::InnerIterator it(B, col); it; ++it)
        trips.emplace_back(k * n + int(it.row()), j * n + col, scale * it.value());
  };
  for (int k = 0; k <= q; ++k) {
    for (int j = 0; j <= q; ++j) {
      const double sign = ((k + j) % 2 == 0) ? 1.0 : -1.0;
      const double C = legendre_deriv_pairing(j, k) + sign;
      add_block(k, j, M, C);
    }
    add_block(k, k, A, tau / (2.0 * k + 1.0));
  }
  SparseMat S(n * (q + 1), n * (q + 1));
  S.setFromTriplets(trips.begin(), trips.end());

  StepOperator op;
  op.q = q;
  op.tau = tau;
  op.lu = std::make_shared<Eigen::SparseLU<SparseMat>>();
  op.lu->compute(S);
  if (op.lu->info() != Eigen::Success)
    throw std::runtime_error("build_step_operator: singular step system");
  const SparseMat& Mt = slab.overlay_space->mass();
  op.cross_mass = slab.prolong_cur.transpose() * Mt * slab.prolong_prev;
  return op;
}

/// Runs the scheme over all steps: u(0) = the L2 projection of u0 onto V^0.
inline SpaceTimeFunction solve_heat(const Discretization& d, const SpaceTimeFn& f,
                                    const std::function<double(const Vec2&)>& u0,
                                    std::vector<StepOperator>* operators = nullptr) {
  SpaceTimeFunction u;
  u.disc = &d;
  u.initial = d.initial_space->project_L2(u0);
  Vector prev = u.initial;
  const StepOperator* cached = nullptr;
  StepOperator local;
  for (int s = 0; s < d.n_steps(); ++s) {
    const bool reusable = cached && s > 0 && d.slabs[s].space == d.slabs[s - 1].space &&
                          d.slabs[s].overlay_space == d.slabs[s - 1].overlay_space &&
                          d.partition.degree(s) == d.partition.degree(s - 1) &&
                          std::abs(d.partition.tau(s) - d.partition.tau(s - 1)) <
                              1e-14 * d.partition.tau(s);
    if (!reusable) {
      local = build_step_operator(d, s);
      cached = &local;
    }
    if (operators) operators->push_back(*cached);
    const Matrix loads = assemble_load(d, s, f, data_quadrature(d, s));
    u.modes.push_back(cached->solve(loads, prev));
    prev = u.trace_left(s + 1);
  }
  return u;
}

/// Time-continuous reconstruction: per step, modes in the overlay space with
/// temporal degree q_s + 1; continuous at nodes and equal to the projected
/// initial datum at t = 0.
struct Reconstruction {
  const Discretization* disc = nullptr;
  std::vector<Matrix> modes;  // modes[s]: dim V~^{s+1} x (q_s + 2)

  double evaluate(int s, int e, const Vec2& x, double t) const {
    const FESpace& sp = *disc->slabs[s].overlay_space;
    double val = 0.0;
    for (int j = 0; j < modes[s].cols(); ++j)
      val += legendre_eval(disc->partition, s, j, t) * sp.evaluate(modes[s].col(j), e, x);
    return val;
  }

  Vec2 gradient(int s, int e, const Vec2& x, double t) const {
    const FESpace& sp = *disc->slabs[s].overlay_space;
    Vec2 g = Vec2::Zero();
    for (int j = 0; j < modes[s].cols(); ++j)
      g += legendre_eval(disc->partition, s, j, t) * sp.gradient(modes[s].col(j), e, x);
    return g;
  }

  /// Legendre modes of the time derivative on step s (degree q_s).
  Matrix time_derivative_modes(int s) const {
    const Matrix& m = modes[s];
    const double tau = disc->partition.tau(s);
    Matrix dm = Matrix::Zero(m.rows(), m.cols() - 1);
    for (int mode = 0; mode + 1 < m.cols(); ++mode)
      for (int j = mode + 1; j < m.cols(); ++j)
        if ((j - mode) % 2 == 1) dm.col(mode) += (2.0 / tau) * (2.0 * mode + 1.0) * m.col(j);
    return dm;
  }
};

inline Reconstruction reconstruct(const SpaceTimeFunction& u) {
  const Discretization& d = *u.disc;
  Reconstruction r;
  r.disc = &d;
  for (int s = 0; s < d.n_steps(); ++s) {
    const StepSlab& slab = d.slabs[s];
    const int q = d.partition.degree(s);
    Matrix m = Matrix::Zero(slab.overlay_space->n_dofs(), q + 2);
    for (int j = 0; j <= q; ++j) m.col(j) = slab.prolong_cur * u.modes[s].col(j);
    const Vector w = u.jump(s);  // jump at the left node of the slab, in V~
    const double half = 0.5 * ((q % 2 == 0) ? 1.0 : -1.0);
    m.col(q) += half * w;
    m.col(q + 1) -= half * w;
    r.modes.push_back(std::move(m));
  }
  return r;
}

/// Residual of the rewritten scheme int (dt Iu, v) + (grad u, grad v) dt =
/// int (f, v) dt over all test modes, relative to the load size.
inline double verify_equivalent_form(const Discretization& d, int s, const SpaceTimeFunction& u,
                                     const Reconstruction& iu, const SpaceTimeFn& f) {
  const StepSlab& slab = d.slabs[s];
  const int q = d.partition.degree(s);
  const double tau = d.partition.tau(s);
  const Matrix loads = assemble_load(d, s, f, data_quadrature(d, s));
  const Matrix dIu = iu.time_derivative_modes(s);
  const SparseMat& Mt = slab.overlay_space->mass();
  const SparseMat& A = slab.space->stiffness();
  double resid = 0.0, scale = loads.cwiseAbs().maxCoeff();
  for (int k = 0; k <= q; ++k) {
    const Vector lhs = (tau / (2.0 * k + 1.0)) *
                       (slab.prolong_cur.transpose() * (Mt * dIu.col(k)) + A * u.modes[s].col(k));
    resid = std::max(resid, (lhs - loads.col(k)).cwiseAbs().maxCoeff());
    scale = std::max(scale, lhs.cwiseAbs().maxCoeff());
  }
  return resid / std::max(scale, 1e-300);
}

}  // namespace parest
