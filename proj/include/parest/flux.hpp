#pragma once

#include "parest/rtn.hpp"
#include "parest/solver.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

namespace parest {

/// psi_a-weighted projection Pi^{a,n} f of one vertex patch: Legendre-mode
/// coefficients in the scaled monomial basis of degree p_a - 1 per sub-element
/// (element centroid/diameter frame).
struct PatchProjection {
  int degree = 1;             // p_a
  std::vector<Matrix> coefs;  // per patch-local sub-element: n_mono x (q+1)
};

namespace detail {
inline double eval_monomial_poly(const Eigen::Ref<const Vector>& coef, int degree,
                                 const Vec2& center, double scale, const Vec2& x) {
  std::vector<double> mono;
  monomial::values(degree, (x - center) / scale, mono);
  double v = 0.0;
  for (std::size_t i = 0; i < mono.size(); ++i) v += coef[int(i)] * mono[i];
  return v;
}

inline std::pair<Vec2, double> element_frame(const SimplicialMesh& mesh, int e) {
  const auto c = mesh.element_coords(e);
  return {(c[0] + c[1] + c[2]) / 3.0, triangle_diameter(c[0], c[1], c[2])};
}
}  // namespace detail

/// Per-step data approximation: all vertex patches of T^n, their projections,
/// and the assembled f_htau = sum_a psi_a Pi^{a,n} f on the overlay mesh.
struct StepData {
  int step = 0;
  int q = 0;
  const Discretization* disc = nullptr;
  std::vector<VertexPatch> patches;          // ascending vertex id over V^n
  std::vector<PatchProjection> projections;  // parallel to patches
  // per overlay element: (patch index, patch-local sub-element index)
  std::vector<std::vector<std::pair<int, int>>> contribs;

  const StepSlab& slab() const { return disc->slabs[step]; }

  int patch_index(int vertex) const {
    for (std::size_t i = 0; i < patches.size(); ++i)
      if (patches[i].vertex == vertex) return int(i);
    return -1;
  }

  /// Pi^{a,n} f of patch pi, Legendre mode j, at x in patch-local sub-element k.
  double projection_value(int pi, int k, int mode, const Vec2& x) const {
    const int e = patches[pi].sub_elements[k];
    const auto [c, h] = detail::element_frame(*slab().overlay, e);
    return detail::eval_monomial_poly(projections[pi].coefs[k].col(mode),
                                      projections[pi].degree - 1, c, h, x);
  }

  /// f_htau Legendre mode at x inside overlay element e.
  double value(int e, int mode, const Vec2& x) const {
    double v = 0.0;
    for (const auto& [pi, k] : contribs[e]) {
      const AffineScalar psi = patches[pi].hat_on_sub(slab().space->mesh(), k);
      v += psi(x) * projection_value(pi, k, mode, x);
    }
    return v;
  }

  double value_at_time(int e, const Vec2& x, double t) const {
    double v = 0.0;
    for (int j = 0; j <= q; ++j)
      v += legendre_eval(disc->partition, step, j, t) * value(e, j, x);
    return v;
  }
};

/// Builds the patch projections for step s with the shared data quadrature.
inline StepData build_step_data(const Discretization& d, int s, const SpaceTimeFn& f) {
  StepData data;
  data.step = s;
  data.q = d.partition.degree(s);
  data.disc = &d;
  const StepSlab& slab = d.slabs[s];
  const SimplicialMesh& mesh = slab.space->mesh();
  const SimplicialMesh& overlay = *slab.overlay;
  const DataQuadrature rule = data_quadrature(d, s);
  const int q = data.q;
  const double tau = d.partition.tau(s);

  // Legendre values at the temporal quadrature points
  Matrix L(int(rule.time_points.size()), q + 1);
  for (std::size_t g = 0; g < rule.time_points.size(); ++g)
    for (int j = 0; j <= q; ++j)
      L(int(g), j) = legendre_eval(d.partition, s, j, rule.time_points[g].x);

  data.contribs.resize(overlay.n_elements());
  for (int gv : mesh.vertex_ids()) {
    VertexPatch patch =
        build_patch(mesh, overlay, slab.overlay_parent_cur, gv, &slab.overlay_space->degrees());
    PatchProjection proj;
    proj.degree = patch.degree;
    const int pdeg = patch.degree - 1;
    const int nm = monomial::count(pdeg);
    std::vector<double> mono;
    for (std::size_t k = 0; k < patch.sub_elements.size(); ++k) {
      const int e = patch.sub_elements[k];
      const auto c = overlay.element_coords(e);
      const auto [cc, h] = detail::element_frame(overlay, e);
      const AffineScalar psi = patch.hat_on_sub(mesh, int(k));
      Matrix W = Matrix::Zero(nm, nm);
      Matrix rhs = Matrix::Zero(nm, q + 1);
      for_each_quadrature_point(c[0], c[1], c[2], std::max(2 * pdeg + 3, rule.space_degree),
                                [&](const Vec2& x, double w) {
                                  monomial::values(pdeg, (x - cc) / h, mono);
                                  const double wpsi = w * psi(x);
                                  for (int m = 0; m < nm; ++m)
                                    for (int l = 0; l <= m; ++l) W(m, l) += wpsi * (mono[m] * mono[l]);
                                });
      for (int m = 0; m < nm; ++m)
        for (int l = m + 1; l < nm; ++l) W(m, l) = W(l, m);
      // time-space moments of psi_a f against the monomials, data rule only
      for (std::size_t g = 0; g < rule.time_points.size(); ++g) {
        const auto& tp = rule.time_points[g];
        for_each_quadrature_point(c[0], c[1], c[2], rule.space_degree, [&](const Vec2& x, double w) {
          monomial::values(pdeg, (x - cc) / h, mono);
          const double v = w * tp.w * psi(x) * f(x, tp.x);
          for (int m = 0; m < nm; ++m)
            for (int j = 0; j <= q; ++j) rhs(m, j) += v * mono[m] * L(int(g), j);
        });
      }
      Eigen::LLT<Matrix> llt(W);
      Matrix block(nm, q + 1);
      for (int j = 0; j <= q; ++j)
        block.col(j) = llt.solve(rhs.col(j)) * ((2.0 * j + 1.0) / tau);
      proj.coefs.push_back(std::move(block));
    }
    const int pi = int(data.patches.size());
    for (std::size_t k = 0; k < patch.sub_elements.size(); ++k)
      data.contribs[patch.sub_elements[k]].emplace_back(pi, int(k));
    data.patches.push_back(std::move(patch));
    data.projections.push_back(std::move(proj));
  }
  return data;
}

/// Per-mode right-hand-side data of one patch: the divergence target g and the
/// flux target tau = psi_a grad u, both evaluated on the fly from the scheme
/// solution, its reconstruction, and the patch projection.
struct PatchDataContext {
  const StepData* data = nullptr;
  int patch_index = -1;
  const SpaceTimeFunction* u = nullptr;
  const Matrix* diu_modes = nullptr;  // reconstruction time-derivative modes

  const VertexPatch& patch() const { return data->patches[patch_index]; }

  Vec2 grad_u(int k, int mode, const Vec2& x) const {
    const StepSlab& slab = data->slab();
    const int e = patch().sub_elements[k];
    return slab.space->gradient(u->modes[data->step].col(mode), slab.overlay_parent_cur[e], x);
  }

  Vec2 tau_value(int k, int mode, const Vec2& x) const {
    const AffineScalar psi = patch().hat_on_sub(data->slab().space->mesh(), k);
    return psi(x) * grad_u(k, mode, x);
  }

  double g_value(int k, int mode, const Vec2& x) const {
    const StepSlab& slab = data->slab();
    const int e = patch().sub_elements[k];
    const AffineScalar psi = patch().hat_on_sub(slab.space->mesh(), k);
    const double diu = slab.overlay_space->evaluate(diu_modes->col(mode), e, x);
    const double pif = data->projection_value(patch_index, k, mode, x);
    return psi(x) * (pif - diu) - psi.grad.dot(grad_u(k, mode, x));
  }
};

struct PatchFluxResult {
  std::vector<Matrix> coefs;  // per sub-element: n_rtn x (q+1), dual-basis coefficients
  std::vector<double> compatibility;        // per mode: |(g,1)| / scale
  std::vector<double> constraint_residual;  // per mode
  std::vector<double> optimality_residual;  // per mode
};

/// Mixed saddle-point system of one vertex patch: minimize ||v + tau||^2 over
/// the H(div)-conforming zero-normal-trace RTN space subject to div v = g,
/// with a scalar gauge pinning the multiplier mean on interior patches. The
/// factorization depends only on geometry and degrees, so it is reused across
/// time steps and Legendre modes.
class PatchFluxSolver {
 public:
  PatchFluxSolver(const Discretization& d, int s, const VertexPatch& patch) {
    const StepSlab& slab = d.slabs[s];
    const SimplicialMesh& overlay = *slab.overlay;
    const int p = patch.degree;
    n_sub_ = int(patch.sub_elements.size());
    quad_degree_ = 2 * p + 4;

    for (int k = 0; k < n_sub_; ++k) {
      const int e = patch.sub_elements[k];
      elements_.emplace_back(
          std::make_shared<RTNElement>(overlay.element_coords(e), overlay.element_vertices(e), p));
    }

    // edge classification within the patch
    std::map<std::uint64_t, std::vector<int>> edge_use;  // key -> sub indices
    for (int k = 0; k < n_sub_; ++k) {
      const auto& v = overlay.element_vertices(patch.sub_elements[k]);
      for (int l = 0; l < 3; ++l) edge_use[detail::edge_key(v[l], v[(l + 1) % 3])].push_back(k);
    }
    int next = 0;
    for (const auto& [key, use] : edge_use) {
      const int v0 = int(key >> 32), v1 = int(key & 0xffffffffu);
      bool free_dofs = use.size() == 2;  // interior to the patch
      if (use.size() == 1 && !patch.interior && overlay.edge_on_boundary(v0, v1))
        free_dofs = true;  // boundary-vertex patch: traces free on the domain boundary
      if (free_dofs) {
        edge_base_[key] = next;
        next += p + 1;
      }
    }
    const int n_edge_unknowns = next;
    interior_base_.resize(n_sub_);
    for (int k = 0; k < n_sub_; ++k) {
      interior_base_[k] = next;
      next += elements_[k]->n_interior_dofs();
    }
    n_flux_ = next;
    nm_loc_ = monomial::count(p);
    n_mult_ = n_sub_ * nm_loc_;
    gauge_ = patch.interior;
    const int n = n_flux_ + n_mult_ + (gauge_ ? 1 : 0);

    // local-to-global flux dof map per sub-element (-1 = constrained to zero)
    l2g_.assign(n_sub_, {});
    for (int k = 0; k < n_sub_; ++k) {
      const RTNElement& rtn = *elements_[k];
      const auto& v = overlay.element_vertices(patch.sub_elements[k]);
      std::vector<int>& map = l2g_[k];
      map.assign(rtn.n_basis(), -1);
      for (int l = 0; l < 3; ++l) {
        const auto key = detail::edge_key(v[l], v[(l + 1) % 3]);
        auto it = edge_base_.find(key);
        if (it == edge_base_.end()) continue;
        for (int j = 0; j <= p; ++j) map[rtn.edge_dof(l, j)] = it->second + j;
      }
      for (int m = 0; m < rtn.n_interior_dofs(); ++m)
        map[rtn.interior_dof(m)] = interior_base_[k] + m;
    }

    // dense KKT assembly
    Matrix K = Matrix::Zero(n, n);
    mult_mean_.resize(n_mult_);
    for (int k = 0; k < n_sub_; ++k) {
      const RTNElement& rtn = *elements_[k];
      const int e = patch.sub_elements[k];
      const auto c = overlay.element_coords(e);
      const auto [cc, h] = detail::element_frame(overlay, e);
      const int nb = rtn.n_basis();
      Matrix mass = Matrix::Zero(nb, nb);
      Matrix div = Matrix::Zero(nm_loc_, nb);
      Vector mu_int = Vector::Zero(nm_loc_);
      Eigen::MatrixXd bv;
      Eigen::VectorXd bd;
      std::vector<double> mono;
      for_each_quadrature_point(c[0], c[1], c[2], quad_degree_, [&](const Vec2& x, double w) {
        rtn.basis_values(x, bv);
        rtn.basis_divergences(x, bd);
        monomial::values(p, (x - cc) / h, mono);
        for (int i = 0; i < nb; ++i)
          for (int j = 0; j <= i; ++j)
            mass(i, j) += w * (bv(i, 0) * bv(j, 0) + bv(i, 1) * bv(j, 1));
        for (int m = 0; m < nm_loc_; ++m) {
          for (int i = 0; i < nb; ++i) div(m, i) += w * mono[m] * bd[i];
          mu_int[m] += w * mono[m];
        }
      });
      for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) mass(i, j) = mass(j, i);
      for (int i = 0; i < nb; ++i) {
        const int gi = l2g_[k][i];
        if (gi < 0) continue;
        for (int j = 0; j < nb; ++j) {
          const int gj = l2g_[k][j];
          if (gj >= 0) K(gi, gj) += mass(i, j);
        }
        for (int m = 0; m < nm_loc_; ++m) {
          K(n_flux_ + k * nm_loc_ + m, gi) += div(m, i);
          K(gi, n_flux_ + k * nm_loc_ + m) += div(m, i);
        }
      }
      for (int m = 0; m < nm_loc_; ++m) mult_mean_[k * nm_loc_ + m] = mu_int[m];
    }
    if (gauge_) {
      for (int m = 0; m < n_mult_; ++m) {
        K(n_flux_ + m, n_flux_ + n_mult_) = mult_mean_[m];
        K(n_flux_ + n_mult_, n_flux_ + m) = mult_mean_[m];
      }
    }
    kkt_ = K;
    lu_.compute(K);
  }

  int n_flux_unknowns() const { return n_flux_; }
  const RTNElement& element(int k) const { return *elements_[k]; }

  /// Solves all Legendre modes for generic per-mode data g(k, mode, x) and
  /// tau(k, mode, x); throws when an interior patch receives incompatible
  /// data (nonzero mean divergence target).
  PatchFluxResult solve(const VertexPatch& patch, const SimplicialMesh& overlay, int q,
                        const std::function<double(int, int, const Vec2&)>& g_fn,
                        const std::function<Vec2(int, int, const Vec2&)>& tau_fn,
                        double compat_reject = 1e-8) const {
    const int p = patch.degree;
    const int n = n_flux_ + n_mult_ + (gauge_ ? 1 : 0);
    Matrix rhs = Matrix::Zero(n, q + 1);
    Vector g_mean = Vector::Zero(q + 1), g_scale = Vector::Zero(q + 1);
    Eigen::MatrixXd bv;
    std::vector<double> mono;
    for (int k = 0; k < n_sub_; ++k) {
      const RTNElement& rtn = *elements_[k];
      const int e = patch.sub_elements[k];
      const auto c = overlay.element_coords(e);
      const auto [cc, h] = detail::element_frame(overlay, e);
      const int nb = rtn.n_basis();
      for_each_quadrature_point(c[0], c[1], c[2], quad_degree_, [&](const Vec2& x, double w) {
        rtn.basis_values(x, bv);
        monomial::values(p, (x - cc) / h, mono);
        for (int mode = 0; mode <= q; ++mode) {
          const Vec2 tau = tau_fn(k, mode, x);
          const double g = g_fn(k, mode, x);
          for (int i = 0; i < nb; ++i) {
            const int gi = l2g_[k][i];
            if (gi >= 0) rhs(gi, mode) -= w * (tau.x() * bv(i, 0) + tau.y() * bv(i, 1));
          }
          for (int m = 0; m < nm_loc_; ++m)
            rhs(n_flux_ + k * nm_loc_ + m, mode) += w * g * mono[m];
          g_mean[mode] += w * g;
          g_scale[mode] += w * std::abs(g);
        }
      });
    }

    PatchFluxResult result;
    for (int mode = 0; mode <= q; ++mode) {
      const double rel = std::abs(g_mean[mode]) / std::max(g_scale[mode], 1e-300);
      result.compatibility.push_back(g_scale[mode] > 0 ? rel : 0.0);
      if (gauge_ && g_scale[mode] > 0 && rel > compat_reject)
        throw std::runtime_error("solve_patch: incompatible divergence data on interior patch (vertex " +
                                 std::to_string(patch.vertex) + ", mode " + std::to_string(mode) +
                                 ", relative mean " + std::to_string(rel) + ")");
    }

    const Matrix sol = lu_.solve(rhs);
    for (int k = 0; k < n_sub_; ++k) {
      Matrix c = Matrix::Zero(elements_[k]->n_basis(), q + 1);
      for (int i = 0; i < elements_[k]->n_basis(); ++i)
        if (l2g_[k][i] >= 0) c.row(i) = sol.row(l2g_[k][i]);
      result.coefs.push_back(std::move(c));
    }
    // KKT residuals per mode, relative to the right-hand side scale
    const Matrix residual = kkt_ * sol - rhs;
    for (int mode = 0; mode <= q; ++mode) {
      const double scale = std::max(rhs.col(mode).cwiseAbs().maxCoeff(), 1e-300);
      result.constraint_residual.push_back(
          residual.col(mode).segment(n_flux_, n_mult_).cwiseAbs().maxCoeff() / scale);
      result.optimality_residual.push_back(
          residual.col(mode).head(n_flux_).cwiseAbs().maxCoeff() / scale);
    }
    return result;
  }

  /// Convenience entry for scheme data.
  PatchFluxResult solve(const PatchDataContext& ctx, const SimplicialMesh& overlay) const {
    return solve(
        ctx.patch(), overlay, ctx.data->q,
        [&](int k, int mode, const Vec2& x) { return ctx.g_value(k, mode, x); },
        [&](int k, int mode, const Vec2& x) { return ctx.tau_value(k, mode, x); });
  }

 private:
  int n_sub_ = 0, n_flux_ = 0, n_mult_ = 0, nm_loc_ = 0, quad_degree_ = 4;
  bool gauge_ = false;
  std::vector<std::shared_ptr<RTNElement>> elements_;
  std::map<std::uint64_t, int> edge_base_;
  std::vector<int> interior_base_;
  std::vector<std::vector<int>> l2g_;
  Vector mult_mean_;
  Matrix kkt_;
  Eigen::PartialPivLU<Matrix> lu_;
};

/// sigma_htau restricted to one step: per overlay element a broken vector
/// polynomial (monomial coefficients per component and Legendre mode).
struct StepFlux {
  int q = 0;
  const Discretization* disc = nullptr;
  int step = 0;
  std::vector<int> degree;   // per overlay element (p_max + 1)
  std::vector<Matrix> fx, fy;  // per element: n_mono(degree) x (q+1)

  Vec2 value(int e, int mode, const Vec2& x) const {
    const auto [c, h] = detail::element_frame(*disc->slabs[step].overlay, e);
    std::vector<double> mono;
    monomial::values(degree[e], (x - c) / h, mono);
    Vec2 v = Vec2::Zero();
    for (std::size_t m = 0; m < mono.size(); ++m) {
      v.x() += fx[e](int(m), mode) * mono[m];
      v.y() += fy[e](int(m), mode) * mono[m];
    }
    return v;
  }

  double divergence(int e, int mode, const Vec2& x) const {
    const auto [c, h] = detail::element_frame(*disc->slabs[step].overlay, e);
    std::vector<double> mono;
    monomial::values(degree[e] - 1, (x - c) / h, mono);
    double v = 0.0;
    const int nc = monomial::count(degree[e]);
    for (int idx = 0; idx < nc; ++idx) {
      const auto [i, j] = monomial::powers_of(idx);
      if (i > 0) v += fx[e](idx, mode) * (i / h) * mono[monomial::index_of(i - 1, j)];
      if (j > 0) v += fy[e](idx, mode) * (j / h) * mono[monomial::index_of(i, j - 1)];
    }
    return v;
  }

  Vec2 value_at_time(int e, const Vec2& x, double t) const {
    Vec2 v = Vec2::Zero();
    for (int j = 0; j <= q; ++j)
      v += legendre_eval(disc->partition, step, j, t) * value(e, j, x);
    return v;
  }
};

struct PatchDiagnostics {
  int vertex = -1;
  bool interior = false;
  std::vector<double> compatibility;
  std::vector<double> constraint_residual;
  std::vector<double> optimality_residual;
};

/// Cache of factorized patch systems keyed by (overlay space, vertex); valid
/// as long as the hierarchy objects are shared between steps.
using PatchSolverCache =
    std::map<std::pair<const void*, int>, std::shared_ptr<PatchFluxSolver>>;

struct StepFluxResult {
  StepFlux flux;
  std::vector<PatchDiagnostics> diagnostics;  // ascending vertex id
};

/// Solves every vertex patch of step s and accumulates the global flux in
/// ascending vertex order. `skip_vertex` is a diagnostic ablation hook that
/// drops one patch from the assembled sum.
inline StepFluxResult compute_step_flux(const Discretization& d, int s,
                                        const SpaceTimeFunction& u, const Reconstruction& iu,
                                        const StepData& data, PatchSolverCache* cache = nullptr,
                                        int skip_vertex = -1) {
  const StepSlab& slab = d.slabs[s];
  const SimplicialMesh& overlay = *slab.overlay;
  const int q = d.partition.degree(s);

  StepFluxResult out;
  StepFlux& flux = out.flux;
  flux.q = q;
  flux.disc = &d;
  flux.step = s;
  flux.degree.assign(overlay.n_elements(), 2);
  for (int e = 0; e < overlay.n_elements(); ++e) {
    int pmax = 1;
    for (const auto& [pi, k] : data.contribs[e]) pmax = std::max(pmax, data.patches[pi].degree);
    flux.degree[e] = pmax + 1;
    flux.fx.push_back(Matrix::Zero(monomial::count(pmax + 1), q + 1));
    flux.fy.push_back(Matrix::Zero(monomial::count(pmax + 1), q + 1));
  }

  const Matrix diu = iu.time_derivative_modes(s);
  for (std::size_t pi = 0; pi < data.patches.size(); ++pi) {
    const VertexPatch& patch = data.patches[pi];
    std::shared_ptr<PatchFluxSolver> solver;
    if (cache) {
      const auto key = std::make_pair(static_cast<const void*>(slab.overlay_space.get()),
                                      patch.vertex);
      auto it = cache->find(key);
      if (it == cache->end())
        it = cache->emplace(key, std::make_shared<PatchFluxSolver>(d, s, patch)).first;
      solver = it->second;
    } else {
      solver = std::make_shared<PatchFluxSolver>(d, s, patch);
    }

    PatchDataContext ctx;
    ctx.data = &data;
    ctx.patch_index = int(pi);
    ctx.u = &u;
    ctx.diu_modes = &diu;
    PatchFluxResult result = solver->solve(ctx, overlay);

    if (patch.vertex != skip_vertex) {
      for (std::size_t k = 0; k < patch.sub_elements.size(); ++k) {
        const int e = patch.sub_elements[k];
        const RTNElement& rtn = solver->element(int(k));
        for (int mode = 0; mode <= q; ++mode) {
          Vector mx, my;
          rtn.to_monomials(result.coefs[k].col(mode), mx, my);
          flux.fx[e].col(mode).head(mx.size()) += mx;
          flux.fy[e].col(mode).head(my.size()) += my;
        }
      }
    }
    PatchDiagnostics diag;
    diag.vertex = patch.vertex;
    diag.interior = patch.interior;
    diag.compatibility = result.compatibility;
    diag.constraint_residual = result.constraint_residual;
    diag.optimality_residual = result.optimality_residual;
    out.diagnostics.push_back(std::move(diag));
  }
  return out;
}

/// H(div)-conformity audit: max relative normal-component jump of the flux
/// across interior overlay edges, per Legendre mode.
inline double flux_normal_jump(const Discretization& d, int s, const StepFlux& flux) {
  const SimplicialMesh& overlay = *d.slabs[s].overlay;
  double worst = 0.0, scale = 0.0;
  for (int e = 0; e < overlay.n_elements(); ++e)
    scale = std::max(scale, std::max(flux.fx[e].cwiseAbs().maxCoeff(),
                                     flux.fy[e].cwiseAbs().maxCoeff()));
  if (scale == 0.0) return 0.0;
  for (const auto& ed : overlay.edges()) {
    if (ed.boundary) continue;
    const Vec2 a = overlay.forest().vertex(ed.v0), b = overlay.forest().vertex(ed.v1);
    const Vec2 t = (b - a).normalized();
    const Vec2 n(t.y(), -t.x());
    for (const auto& gp : gauss_points(0.0, 1.0, flux.degree[ed.tri[0]] + 2)) {
      const Vec2 x = a + gp.x * (b - a);
      for (int mode = 0; mode <= flux.q; ++mode) {
        const double j0 = flux.value(ed.tri[0], mode, x).dot(n);
        const double j1 = flux.value(ed.tri[1], mode, x).dot(n);
        worst = std::max(worst, std::abs(j0 - j1));
      }
    }
  }
  return worst / scale;
}

/// Pointwise equilibration residual dt(Iu) + div sigma - f_htau sampled at
/// space-time quadrature points (degree-2p_a spatial rule x q+3 temporal
/// Gauss points), relative to the sampled data scale.
inline double verify_equilibration(const Discretization& d, int s, const StepFlux& flux,
                                   const Reconstruction& iu, const StepData& data) {
  const StepSlab& slab = d.slabs[s];
  const SimplicialMesh& overlay = *slab.overlay;
  const int q = d.partition.degree(s);
  const Matrix diu = iu.time_derivative_modes(s);
  const auto tpts = gauss_points(d.partition.t(s), d.partition.t(s + 1), q + 3);
  double worst = 0.0, scale = 0.0;
  for (int e = 0; e < overlay.n_elements(); ++e) {
    const auto c = overlay.element_coords(e);
    const int pa = flux.degree[e] - 1;
    for_each_quadrature_point(c[0], c[1], c[2], 2 * pa, [&](const Vec2& x, double) {
      for (const auto& tp : tpts) {
        double dtu = 0.0, fh = 0.0, divs = 0.0;
        for (int j = 0; j <= q; ++j) {
          const double L = legendre_eval(d.partition, s, j, tp.x);
          dtu += L * slab.overlay_space->evaluate(diu.col(j), e, x);
          fh += L * data.value(e, j, x);
          divs += L * flux.divergence(e, j, x);
        }
        worst = std::max(worst, std::abs(dtu + divs - fh));
        scale = std::max({scale, std::abs(fh), std::abs(dtu), std::abs(divs)});
      }
    });
  }
  return scale > 0.0 ? worst / scale : worst;
}

/// Pointwise scheme identity at an interior vertex: the polynomial
/// t -> (dt Iu, psi_a) + (grad u, grad psi_a) - (Pi^{a,n} f, psi_a) sampled at
/// q+3 Gauss points, relative to the size of its terms.
inline double pointwise_identity_check(const Discretization& d, int s, const StepData& data,
                                       int patch_index, const SpaceTimeFunction& u,
                                       const Reconstruction& iu) {
  const VertexPatch& patch = data.patches[patch_index];
  if (!patch.interior)
    throw std::invalid_argument("pointwise_identity_check: vertex is not interior");
  const StepSlab& slab = d.slabs[s];
  const SimplicialMesh& overlay = *slab.overlay;
  const int q = d.partition.degree(s);
  const Matrix diu = iu.time_derivative_modes(s);
  // modal integrals over the patch
  Vector I_dtu = Vector::Zero(q + 1), I_grad = Vector::Zero(q + 1), I_f = Vector::Zero(q + 1);
  for (std::size_t k = 0; k < patch.sub_elements.size(); ++k) {
    const int e = patch.sub_elements[k];
    const auto c = overlay.element_coords(e);
    const AffineScalar psi = patch.hat_on_sub(slab.space->mesh(), int(k));
    for_each_quadrature_point(c[0], c[1], c[2], 2 * patch.degree + 2, [&](const Vec2& x, double w) {
      for (int j = 0; j <= q; ++j) {
        I_dtu[j] += w * psi(x) * slab.overlay_space->evaluate(diu.col(j), e, x);
        I_grad[j] += w * psi.grad.dot(slab.space->gradient(u.modes[s].col(j),
                                                           slab.overlay_parent_cur[e], x));
        I_f[j] += w * psi(x) * data.projection_value(patch_index, int(k), j, x);
      }
    });
  }
  double worst = 0.0, scale = 0.0;
  for (const auto& tp : gauss_points(d.partition.t(s), d.partition.t(s + 1), q + 3)) {
    double r = 0.0, t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (int j = 0; j <= q; ++j) {
      const double L = legendre_eval(d.partition, s, j, tp.x);
      t1 += L * I_dtu[j];
      t2 += L * I_grad[j];
      t3 += L * I_f[j];
    }
    r = t1 + t2 - t3;
    worst = std::max(worst, std::abs(r));
    scale = std::max({scale, std::abs(t1), std::abs(t2), std::abs(t3)});
  }
  return scale > 0.0 ? worst / scale : worst;
}

}  // namespace parest
