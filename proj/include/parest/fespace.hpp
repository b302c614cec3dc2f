#pragma once

#include "parest/legendre.hpp"
#include "parest/mesh.hpp"
#include "parest/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace parest {

using SparseMat = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// H^1_0-conforming hp Lagrange space on a SimplicialMesh with per-element
/// degrees in {1,2,3}. Vertex dofs carry values; edges carry hierarchical
/// moments lam_a lam_b P_k(lam_b - lam_a) oriented by global vertex ids
/// (minimum degree rule across an edge); degree 3 adds the interior bubble.
/// Homogeneous Dirichlet dofs are eliminated unless `constrained = false`.
class FESpace {
 public:
  FESpace(std::shared_ptr<const SimplicialMesh> mesh, std::vector<int> degrees,
          bool constrained = true)
      : mesh_(std::move(mesh)), degree_(std::move(degrees)), constrained_(constrained) {
    if (int(degree_.size()) != mesh_->n_elements())
      throw std::invalid_argument("FESpace: one degree per element required");
    for (int p : degree_)
      if (p < 1 || p > 3) throw std::invalid_argument("FESpace: degrees in {1,2,3} supported");
    number_dofs();
  }

  FESpace(std::shared_ptr<const SimplicialMesh> mesh, int degree, bool constrained = true)
      : FESpace(std::move(mesh), std::vector<int>(mesh->n_elements(), degree), constrained) {}

  const SimplicialMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const SimplicialMesh>& mesh_ptr() const { return mesh_; }
  int n_dofs() const { return n_dofs_; }
  int element_degree(int e) const { return degree_[e]; }
  const std::vector<int>& degrees() const { return degree_; }
  bool constrained() const { return constrained_; }
  int edge_degree(int edge_index) const { return edge_degree_[edge_index]; }

  int max_degree() const {
    int p = 1;
    for (int d : degree_) p = std::max(p, d);
    return p;
  }

  /// Local basis ordering on element e: the 3 vertex hats, then per local edge
  /// (0:(v0,v1), 1:(v1,v2), 2:(v2,v0)) the edge functions up to the edge
  /// degree, then the interior bubble when p = 3.
  int n_local(int e) const {
    int n = 3;
    const auto& v = mesh_->element_vertices(e);
    for (int k = 0; k < 3; ++k) n += local_edge_dofs(e, v[k], v[(k + 1) % 3]);
    if (degree_[e] >= 3) n += 1;
    return n;
  }

  /// Global dof of local basis i on element e; -1 for eliminated Dirichlet dofs.
  int local_to_global(int e, int i) const { return l2g_[e].at(i); }
  const std::vector<int>& element_dofs(int e) const { return l2g_[e]; }

  /// Values of all local basis functions at barycentric point l.
  void basis_values(int e, const std::array<double, 3>& l, std::vector<double>& out) const {
    const auto& v = mesh_->element_vertices(e);
    out.clear();
    out.push_back(l[0]);
    out.push_back(l[1]);
    out.push_back(l[2]);
    for (int k = 0; k < 3; ++k) {
      const int i0 = k, i1 = (k + 1) % 3;
      const int ndof = local_edge_dofs(e, v[i0], v[i1]);
      const auto [la, lb] = oriented_pair(v[i0], v[i1], l[i0], l[i1]);
      for (int j = 0; j < ndof; ++j) out.push_back(la * lb * legendre_ref(j, lb - la));
    }
    if (degree_[e] >= 3) out.push_back(l[0] * l[1] * l[2]);
  }

  /// Gradients of all local basis functions at barycentric point l.
  void basis_gradients(int e, const std::array<double, 3>& l, std::vector<Vec2>& out) const {
    const auto c = mesh_->element_coords(e);
    const auto g = barycentric_gradients(c[0], c[1], c[2]);
    const auto& v = mesh_->element_vertices(e);
    out.clear();
    out.push_back(g[0]);
    out.push_back(g[1]);
    out.push_back(g[2]);
    for (int k = 0; k < 3; ++k) {
      const int i0 = k, i1 = (k + 1) % 3;
      const int ndof = local_edge_dofs(e, v[i0], v[i1]);
      const bool flip = v[i0] > v[i1];
      const double la = flip ? l[i1] : l[i0], lb = flip ? l[i0] : l[i1];
      const Vec2 ga = flip ? g[i1] : g[i0], gb = flip ? g[i0] : g[i1];
      for (int j = 0; j < ndof; ++j) {
        const double s = lb - la;
        const double P = legendre_ref(j, s);
        const double dP = legendre_deriv_ref(j, s);
        out.push_back((gb * la + ga * lb) * P + la * lb * dP * (gb - ga));
      }
    }
    if (degree_[e] >= 3)
      out.push_back(g[0] * l[1] * l[2] + g[1] * l[0] * l[2] + g[2] * l[0] * l[1]);
  }

  double evaluate(const Vector& coefs, int e, const Vec2& x) const {
    const auto c = mesh_->element_coords(e);
    const auto l = barycentric(c[0], c[1], c[2], x);
    std::vector<double> phi;
    basis_values(e, l, phi);
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const int g = l2g_[e][i];
      if (g >= 0) s += coefs[g] * phi[i];
    }
    return s;
  }

  Vec2 gradient(const Vector& coefs, int e, const Vec2& x) const {
    const auto c = mesh_->element_coords(e);
    const auto l = barycentric(c[0], c[1], c[2], x);
    std::vector<Vec2> dphi;
    basis_gradients(e, l, dphi);
    Vec2 s = Vec2::Zero();
    for (std::size_t i = 0; i < dphi.size(); ++i) {
      const int g = l2g_[e][i];
      if (g >= 0) s += coefs[g] * dphi[i];
    }
    return s;
  }

  /// Stiffness matrix (grad u, grad v); SPD on the constrained space.
  const SparseMat& stiffness() const {
    if (!stiffness_) stiffness_ = assemble([&](int e, auto&& emit) { element_stiffness(e, emit); });
    return *stiffness_;
  }

  /// Mass matrix (u, v).
  const SparseMat& mass() const {
    if (!mass_) mass_ = assemble([&](int e, auto&& emit) { element_mass(e, emit); });
    return *mass_;
  }

  /// Load vector (f, v) with an elementwise callable f(element, x).
  Vector load(const std::function<double(int, const Vec2&)>& f, int quad_degree) const {
    Vector rhs = Vector::Zero(n_dofs_);
    std::vector<double> phi;
    for (int e = 0; e < mesh_->n_elements(); ++e) {
      const auto c = mesh_->element_coords(e);
      for_each_quadrature_point(c[0], c[1], c[2], quad_degree, [&](const Vec2& x, double w) {
        const auto l = barycentric(c[0], c[1], c[2], x);
        basis_values(e, l, phi);
        const double fx = f(e, x);
        for (std::size_t i = 0; i < phi.size(); ++i) {
          const int g = l2g_[e][i];
          if (g >= 0) rhs[g] += w * fx * phi[i];
        }
      });
    }
    return rhs;
  }

  /// L2-orthogonal projection onto the space. The default rule is generous so
  /// that Galerkin orthogonality holds to ~1e-12 for smooth data as well.
  Vector project_L2(const std::function<double(const Vec2&)>& f, int quad_degree = -1) const {
    if (quad_degree < 0) quad_degree = std::max(2 * max_degree() + 4, 12);
    Vector rhs = load([&](int, const Vec2& x) { return f(x); }, quad_degree);
    Eigen::SimplicialLDLT<SparseMat> chol(mass());
    if (chol.info() != Eigen::Success) throw std::runtime_error("project_L2: mass factorization failed");
    return chol.solve(rhs);
  }

  /// Interpolation onto the space of a function given per element; exact for
  /// any function whose restriction to each element is a polynomial of the
  /// element degree (used for prolongation between nested spaces).
  Vector interpolate(const std::function<double(int, const Vec2&)>& f) const {
    Vector coefs = Vector::Zero(n_dofs_);
    std::vector<bool> done(n_dofs_, false);
    std::vector<double> phi;
    for (int e = 0; e < mesh_->n_elements(); ++e) {
      const auto c = mesh_->element_coords(e);
      const auto& v = mesh_->element_vertices(e);
      int loc = 0;
      // vertex values
      for (int k = 0; k < 3; ++k, ++loc) {
        const int g = l2g_[e][loc];
        if (g >= 0 && !done[g]) {
          coefs[g] = f(e, c[k]);
          done[g] = true;
        }
      }
      // edge moments: collocate the vertex-reduced trace at Gauss points
      for (int k = 0; k < 3; ++k) {
        const int i0 = k, i1 = (k + 1) % 3;
        const int ndof = local_edge_dofs(e, v[i0], v[i1]);
        if (ndof == 0) continue;
        const bool flip = v[i0] > v[i1];
        const Vec2 pa = flip ? c[i1] : c[i0], pb = flip ? c[i0] : c[i1];
        const double fa = f(e, pa), fb = f(e, pb);
        bool fresh = false;
        for (int j = 0; j < ndof; ++j)
          if (const int g = l2g_[e][loc + j]; g >= 0 && !done[g]) fresh = true;
        if (fresh) {
          Eigen::MatrixXd V(ndof, ndof);
          Eigen::VectorXd r(ndof);
          const auto gp = gauss_points(-1.0, 1.0, ndof);
          for (int q = 0; q < ndof; ++q) {
            const double s = gp[q].x;
            const Vec2 x = 0.5 * (1.0 - s) * pa + 0.5 * (1.0 + s) * pb;
            const double la = 0.5 * (1.0 - s), lb = 0.5 * (1.0 + s);
            r[q] = f(e, x) - fa * la - fb * lb;
            for (int j = 0; j < ndof; ++j) V(q, j) = la * lb * legendre_ref(j, s);
          }
          const Eigen::VectorXd cj = V.fullPivLu().solve(r);
          for (int j = 0; j < ndof; ++j) {
            const int g = l2g_[e][loc + j];
            if (g >= 0 && !done[g]) {
              coefs[g] = cj[j];
              done[g] = true;
            }
          }
        }
        loc += ndof;
      }
      if (degree_[e] >= 3) {
        const int g = l2g_[e][loc];
        if (g >= 0 && !done[g]) {
          // collocate at the centroid after removing vertex and edge parts
          const Vec2 x = (c[0] + c[1] + c[2]) / 3.0;
          const std::array<double, 3> l = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
          basis_values(e, l, phi);
          double rest = 0.0;
          for (int i = 0; i < loc; ++i)
            if (const int gi = l2g_[e][i]; gi >= 0) rest += coefs[gi] * phi[i];
          coefs[g] = (f(e, x) - rest) / phi[loc];
          done[g] = true;
        }
      }
    }
    return coefs;
  }

  /// Sparse prolongation matrix from a coarser nested space; `parent_map`
  /// gives, per element of this space's mesh, the containing element of the
  /// coarse mesh. Exact since the spaces are nested.
  SparseMat prolongation_from(const FESpace& coarse, const std::vector<int>& parent_map) const {
    std::vector<Eigen::Triplet<double>> trips;
    Vector unit = Vector::Zero(coarse.n_dofs());
    // Build row-wise via interpolation of each coarse basis function would be
    // O(n^2); instead interpolate coordinate functionals: every fine dof value
    // is a fixed linear functional of coarse dofs supported on one coarse
    // element, so assemble per fine element using coarse local bases.
    std::vector<bool> done(n_dofs_, false);
    for (int e = 0; e < mesh_->n_elements(); ++e) {
      const int ce = parent_map.at(e);
      const int ncl = coarse.n_local(ce);
      std::vector<int> cg(ncl);
      for (int i = 0; i < ncl; ++i) cg[i] = coarse.local_to_global(ce, i);
      const auto cc = coarse.mesh().element_coords(ce);
      auto coarse_row = [&](const Vec2& x, Eigen::VectorXd& row) {
        const auto l = barycentric(cc[0], cc[1], cc[2], x);
        std::vector<double> phi;
        coarse.basis_values(ce, l, phi);
        row = Eigen::Map<Eigen::VectorXd>(phi.data(), phi.size());
      };
      const auto c = mesh_->element_coords(e);
      const auto& v = mesh_->element_vertices(e);
      int loc = 0;
      Eigen::VectorXd row;
      std::vector<Eigen::VectorXd> local_rows;  // functional of coarse dofs per local fine dof
      for (int k = 0; k < 3; ++k, ++loc) {
        coarse_row(c[k], row);
        local_rows.push_back(row);
      }
      for (int k = 0; k < 3; ++k) {
        const int i0 = k, i1 = (k + 1) % 3;
        const int ndof = local_edge_dofs(e, v[i0], v[i1]);
        if (ndof > 0) {
          const bool flip = v[i0] > v[i1];
          const Vec2 pa = flip ? c[i1] : c[i0], pb = flip ? c[i0] : c[i1];
          Eigen::VectorXd rowa, rowb;
          coarse_row(pa, rowa);
          coarse_row(pb, rowb);
          Eigen::MatrixXd V(ndof, ndof);
          Eigen::MatrixXd R(ndof, ncl);
          const auto gp = gauss_points(-1.0, 1.0, ndof);
          for (int q = 0; q < ndof; ++q) {
            const double s = gp[q].x;
            const Vec2 x = 0.5 * (1.0 - s) * pa + 0.5 * (1.0 + s) * pb;
            const double la = 0.5 * (1.0 - s), lb = 0.5 * (1.0 + s);
            coarse_row(x, row);
            R.row(q) = row.transpose() - la * rowa.transpose() - lb * rowb.transpose();
            for (int j = 0; j < ndof; ++j) V(q, j) = la * lb * legendre_ref(j, s);
          }
          const Eigen::MatrixXd C = V.fullPivLu().solve(R);
          for (int j = 0; j < ndof; ++j) local_rows.push_back(C.row(j).transpose());
        }
        loc += ndof;
      }
      if (degree_[e] >= 3) {
        const Vec2 x = (c[0] + c[1] + c[2]) / 3.0;
        coarse_row(x, row);
        const std::array<double, 3> l = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        std::vector<double> phi;
        basis_values(e, l, phi);
        Eigen::VectorXd acc = row;
        for (int i = 0; i < loc; ++i) acc -= phi[i] * local_rows[i];
        local_rows.push_back(acc / phi[loc]);
      }
      for (std::size_t i = 0; i < local_rows.size(); ++i) {
        const int g = l2g_[e][i];
        if (g < 0 || done[g]) continue;
        done[g] = true;
        for (int j = 0; j < ncl; ++j)
          if (cg[j] >= 0 && local_rows[i][j] != 0.0) trips.emplace_back(g, cg[j], local_rows[i][j]);
      }
    }
    SparseMat P(n_dofs_, coarse.n_dofs());
    P.setFromTriplets(trips.begin(), trips.end());
    return P;
  }

  static double legendre_deriv_ref(int q, double x) {
    if (q == 0) return 0.0;
    // derivative recurrence via (x^2-1) P' = q (x P - P_{q-1})
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= q; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    const double denom = x * x - 1.0;
    if (std::abs(denom) > 1e-10) return q * (x * p1 - p0) / denom;
    // endpoint values: P_q'(±1) = (±1)^{q-1} q(q+1)/2
    const double sign = (x > 0) ? 1.0 : ((q - 1) % 2 == 0 ? 1.0 : -1.0);
    return sign * 0.5 * q * (q + 1.0);
  }

 private:
  static std::pair<double, double> oriented_pair(int va, int vb, double la, double lb) {
    return va < vb ? std::pair{la, lb} : std::pair{lb, la};
  }

  int local_edge_dofs(int e, int va, int vb) const {
    const int ei = mesh_->edge_index(va, vb);
    return std::max(0, edge_degree_[ei] - 1);
  }

  void number_dofs() {
    const auto& edges = mesh_->edges();
    edge_degree_.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& ed = edges[i];
      int d = degree_[ed.tri[0]];
      if (ed.tri[1] >= 0) d = std::min(d, degree_[ed.tri[1]]);
      edge_degree_[i] = d;
    }
    std::unordered_map<int, int> vertex_dof;
    int next = 0;
    for (int gv : mesh_->vertex_ids()) {
      if (constrained_ && mesh_->vertex_on_boundary(gv))
        vertex_dof[gv] = -1;
      else
        vertex_dof[gv] = next++;
    }
    std::vector<int> edge_dof0(edges.size(), -1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const int nd = std::max(0, edge_degree_[i] - 1);
      if (nd == 0) continue;
      if (constrained_ && edges[i].boundary) continue;
      edge_dof0[i] = next;
      next += nd;
    }
    l2g_.resize(mesh_->n_elements());
    for (int e = 0; e < mesh_->n_elements(); ++e) {
      const auto& v = mesh_->element_vertices(e);
      auto& map = l2g_[e];
      map.clear();
      for (int k = 0; k < 3; ++k) map.push_back(vertex_dof[v[k]]);
      for (int k = 0; k < 3; ++k) {
        const int ei = mesh_->edge_index(v[k], v[(k + 1) % 3]);
        const int nd = std::max(0, edge_degree_[ei] - 1);
        for (int j = 0; j < nd; ++j)
          map.push_back(edge_dof0[ei] < 0 ? -1 : edge_dof0[ei] + j);
      }
      if (degree_[e] >= 3) map.push_back(next++);
    }
    n_dofs_ = next;
  }

  template <class ElementKernel>
  SparseMat assemble(ElementKernel&& kernel) const {
    std::vector<Eigen::Triplet<double>> trips;
    for (int e = 0; e < mesh_->n_elements(); ++e)
      kernel(e, [&](int i, int j, double val) {
        const int gi = l2g_[e][i], gj = l2g_[e][j];
        if (gi >= 0 && gj >= 0) trips.emplace_back(gi, gj, val);
      });
    SparseMat A(n_dofs_, n_dofs_);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
  }

  template <class Emit>
  void element_stiffness(int e, Emit&& emit) const {
    const auto c = mesh_->element_coords(e);
    const int n = n_local(e);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    std::vector<Vec2> dphi;
    for_each_quadrature_point(c[0], c[1], c[2], 2 * degree_[e], [&](const Vec2& x, double w) {
      const auto l = barycentric(c[0], c[1], c[2], x);
      basis_gradients(e, l, dphi);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) K(i, j) += w * dphi[i].dot(dphi[j]);
    });
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) emit(i, j, K(i, j));
  }

  template <class Emit>
  void element_mass(int e, Emit&& emit) const {
    const auto c = mesh_->element_coords(e);
    const int n = n_local(e);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> phi;
    for_each_quadrature_point(c[0], c[1], c[2], 2 * degree_[e] + 2, [&](const Vec2& x, double w) {
      const auto l = barycentric(c[0], c[1], c[2], x);
      basis_values(e, l, phi);
      // accumulate one triangle and mirror so assembly is exactly symmetric
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) M(i, j) += w * (phi[i] * phi[j]);
    });
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) M(i, j) = M(j, i);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) emit(i, j, M(i, j));
  }

  std::shared_ptr<const SimplicialMesh> mesh_;
  std::vector<int> degree_;
  bool constrained_;
  std::vector<int> edge_degree_;
  std::vector<std::vector<int>> l2g_;
  int n_dofs_ = 0;
  mutable std::optional<SparseMat> stiffness_;
  mutable std::optional<SparseMat> mass_;
};

// ---------------------------------------------------------------------------
// Space-time discretization and functions
// ---------------------------------------------------------------------------

/// One time-step slab: the spatial space V^n, the common refinement with the
/// previous step's mesh, prolongations of V^{n-1} and V^n into the overlay
/// space, and the overlay mass matrix used for cross-space pairings.
struct StepSlab {
  std::shared_ptr<FESpace> space;                // V^n
  std::shared_ptr<const SimplicialMesh> overlay; // T~^n
  std::vector<int> overlay_parent_prev;    // element of T^{n-1} per overlay element
  std::vector<int> overlay_parent_cur;     // element of T^n per overlay element
  std::shared_ptr<FESpace> overlay_space;  // V~^n
  SparseMat prolong_prev;                  // V^{n-1} -> V~^n
  SparseMat prolong_cur;                   // V^n -> V~^n
};

/// Full space-time discretization: partition, V^0, and one slab per step.
struct Discretization {
  TimePartition partition;
  std::shared_ptr<FESpace> initial_space;  // V^0
  std::vector<StepSlab> slabs;             // slabs[s] covers I_s

  int n_steps() const { return partition.n_steps(); }

  /// Builds overlay data for step s given the chain of spaces.
  static Discretization build(TimePartition part, std::vector<std::shared_ptr<FESpace>> spaces) {
    // spaces[0] = V^0, spaces[s+1] = V^{s+1} used on I_s
    if (int(spaces.size()) != part.n_steps() + 1)
      throw std::invalid_argument("Discretization: need one space per node");
    Discretization d;
    d.partition = std::move(part);
    d.initial_space = spaces[0];
    for (int s = 0; s < d.partition.n_steps(); ++s) {
      if (s > 0 && spaces[s + 1] == spaces[s]) {
        d.slabs.push_back(d.slabs.back());  // identical slab, share everything
        continue;
      }
      StepSlab slab;
      slab.space = spaces[s + 1];
      const auto& prev_mesh = spaces[s]->mesh();
      const auto& cur_mesh = spaces[s + 1]->mesh();
      Overlay ov = (&prev_mesh == &cur_mesh) ? self_overlay(spaces[s + 1]->mesh_ptr())
                                             : common_refinement(prev_mesh, cur_mesh);
      slab.overlay = ov.mesh;
      slab.overlay_parent_prev = std::move(ov.parent_in_a);
      slab.overlay_parent_cur = std::move(ov.parent_in_b);
      // overlay degrees: max of the two parents' degrees
      std::vector<int> pdeg(slab.overlay->n_elements());
      for (int e = 0; e < slab.overlay->n_elements(); ++e)
        pdeg[e] = std::max(spaces[s]->element_degree(slab.overlay_parent_prev[e]),
                           spaces[s + 1]->element_degree(slab.overlay_parent_cur[e]));
      if (&prev_mesh == &cur_mesh && spaces[s] == spaces[s + 1] &&
          pdeg == spaces[s + 1]->degrees()) {
        slab.overlay_space = spaces[s + 1];
        SparseMat id(slab.overlay_space->n_dofs(), slab.overlay_space->n_dofs());
        id.setIdentity();
        slab.prolong_prev = id;
        slab.prolong_cur = id;
      } else {
        slab.overlay_space = std::make_shared<FESpace>(slab.overlay, pdeg);
        slab.prolong_prev =
            slab.overlay_space->prolongation_from(*spaces[s], slab.overlay_parent_prev);
        slab.prolong_cur =
            slab.overlay_space->prolongation_from(*spaces[s + 1], slab.overlay_parent_cur);
      }
      d.slabs.push_back(std::move(slab));
    }
    return d;
  }

  /// Convenience: same space on every step.
  static Discretization uniform(TimePartition part, std::shared_ptr<FESpace> space) {
    std::vector<std::shared_ptr<FESpace>> spaces(part.n_steps() + 1, space);
    return build(std::move(part), std::move(spaces));
  }
};

/// Element of V_htau: per step the Legendre-mode coefficient block (columns
/// j = 0..q_s of spatial coefficients in V^{s+1}), plus the initial value in
/// V^0. Left-continuous at nodes by convention.
struct SpaceTimeFunction {
  const Discretization* disc = nullptr;
  Vector initial;               // coefficients in V^0
  std::vector<Matrix> modes;    // modes[s]: dim V^{s+1} x (q_s + 1)

  /// Trace from the left at node index n (time t_n), n = 1..N: sum of modes.
  Vector trace_left(int n) const {
    const int s = n - 1;
    const Matrix& m = modes.at(s);
    Vector v = Vector::Zero(m.rows());
    for (int j = 0; j < m.cols(); ++j) v += m.col(j);
    return v;
  }

  /// Trace from the right at node index n (time t_n), n = 0..N-1.
  Vector trace_right(int n) const {
    const Matrix& m = modes.at(n);
    Vector v = Vector::Zero(m.rows());
    for (int j = 0; j < m.cols(); ++j) v += legendre_left_value(j) * m.col(j);
    return v;
  }

  /// Value at node n from the left-continuity convention; n = 0 gives the
  /// initial datum in V^0.
  Vector value_at_node(int n) const { return n == 0 ? initial : trace_left(n); }

  /// Temporal jump at node n (0 <= n <= N-1), prolonged into the overlay
  /// space V~^{n+1} of the slab to its right.
  Vector jump(int n) const {
    const StepSlab& slab = disc->slabs.at(n);
    const Vector left = value_at_node(n);
    return slab.prolong_prev * left - slab.prolong_cur * trace_right(n);
  }

  /// Point value at (x, t) with t inside step s; element index in V^{s+1} mesh.
  double evaluate(int s, int e, const Vec2& x, double t) const {
    const FESpace& sp = *disc->slabs[s].space;
    double val = 0.0;
    for (int j = 0; j < modes[s].cols(); ++j)
      val += legendre_eval(disc->partition, s, j, t) * sp.evaluate(modes[s].col(j), e, x);
    return val;
  }

  Vec2 gradient(int s, int e, const Vec2& x, double t) const {
    const FESpace& sp = *disc->slabs[s].space;
    Vec2 g = Vec2::Zero();
    for (int j = 0; j < modes[s].cols(); ++j)
      g += legendre_eval(disc->partition, s, j, t) * sp.gradient(modes[s].col(j), e, x);
    return g;
  }
};

}  // namespace parest
