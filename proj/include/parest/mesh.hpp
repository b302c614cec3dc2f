#pragma once

#include "parest/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace parest {

namespace detail {
inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}
}  // namespace detail

/// Shared bisection forest. Every mesh of a run is an antichain of forest
/// nodes, so common refinements are forest joins and containment queries are
/// ancestor walks. Triangles are stored as (peak, a, b) with refinement edge
/// (a, b); bisection inserts the midpoint m of (a, b) and produces children
/// (m, peak, a) and (m, b, peak) whose refinement edges are the old non-
/// refinement edges, the standard newest-vertex rule.
class Forest {
 public:
  struct Node {
    std::array<int, 3> v;  // (peak, a, b)
    int parent = -1;
    std::array<int, 2> child = {-1, -1};
    int level = 0;
    int root = -1;
    bool has_children() const { return child[0] >= 0; }
  };

  int add_vertex(const Vec2& p) {
    vertices_.push_back(p);
    return int(vertices_.size()) - 1;
  }

  /// Adds a root triangle; callers must orient (v0,v1,v2) positively and are
  /// responsible for a compatible refinement-edge assignment across roots.
  int add_root(int peak, int a, int b) {
    Node n;
    n.v = {peak, a, b};
    n.root = int(nodes_.size());
    nodes_.push_back(n);
    return n.root;
  }

  const Node& node(int id) const { return nodes_.at(id); }
  const Vec2& vertex(int id) const { return vertices_.at(id); }
  int n_vertices() const { return int(vertices_.size()); }
  int n_nodes() const { return int(nodes_.size()); }

  std::array<Vec2, 3> coords(int id) const {
    const auto& n = nodes_.at(id);
    return {vertices_[n.v[0]], vertices_[n.v[1]], vertices_[n.v[2]]};
  }

  /// Bisects node id (idempotent); children share midpoints across the forest.
  void ensure_children(int id) {
    Node& n = nodes_.at(id);
    if (n.has_children()) return;
    const int m = midpoint(n.v[1], n.v[2]);
    const int c0 = int(nodes_.size());
    Node a, b;
    a.v = {m, n.v[0], n.v[1]};
    b.v = {m, n.v[2], n.v[0]};
    a.parent = b.parent = id;
    a.level = b.level = n.level + 1;
    a.root = b.root = n.root;
    nodes_.push_back(a);
    nodes_.push_back(b);
    nodes_[id].child = {c0, c0 + 1};
  }

  int midpoint(int va, int vb) {
    const auto key = detail::edge_key(va, vb);
    auto it = midpoints_.find(key);
    if (it != midpoints_.end()) return it->second;
    const int m = add_vertex(0.5 * (vertices_[va] + vertices_[vb]));
    midpoints_.emplace(key, m);
    return m;
  }

  bool is_ancestor_or_self(int anc, int id) const {
    while (id >= 0) {
      if (id == anc) return true;
      id = nodes_[id].parent;
    }
    return false;
  }

 private:
  std::vector<Vec2> vertices_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, int> midpoints_;
};

/// Immutable conforming triangulation drawn from a Forest. Elements are
/// referenced by local index (position in the ascending forest-id list), which
/// fixes all iteration orders.
class SimplicialMesh {
 public:
  struct Edge {
    int v0, v1;         // v0 < v1
    int tri[2];         // local element indices; tri[1] = -1 on the boundary
    bool boundary;
  };

  SimplicialMesh(std::shared_ptr<Forest> forest, std::vector<int> elems)
      : forest_(std::move(forest)), elems_(std::move(elems)) {
    std::sort(elems_.begin(), elems_.end());
    build_topology();
  }

  const Forest& forest() const { return *forest_; }
  const std::shared_ptr<Forest>& forest_ptr() const { return forest_; }
  int n_elements() const { return int(elems_.size()); }
  int n_vertices() const { return int(vertex_ids_.size()); }
  int n_edges() const { return int(edges_.size()); }

  int element_node(int e) const { return elems_.at(e); }
  const std::vector<int>& element_nodes() const { return elems_; }
  int local_element(int node_id) const {
    auto it = std::lower_bound(elems_.begin(), elems_.end(), node_id);
    if (it == elems_.end() || *it != node_id) return -1;
    return int(it - elems_.begin());
  }

  /// Global (forest) vertex ids of element e, in (peak, a, b) order.
  const std::array<int, 3>& element_vertices(int e) const { return forest_->node(elems_[e]).v; }
  std::array<Vec2, 3> element_coords(int e) const { return forest_->coords(elems_[e]); }
  double element_area(int e) const {
    const auto c = element_coords(e);
    return signed_area(c[0], c[1], c[2]);
  }
  double element_diameter(int e) const {
    const auto c = element_coords(e);
    return triangle_diameter(c[0], c[1], c[2]);
  }

  const std::vector<int>& vertex_ids() const { return vertex_ids_; }
  bool uses_vertex(int gv) const { return vertex_local_.count(gv) > 0; }
  bool vertex_on_boundary(int gv) const { return boundary_vertices_.count(gv) > 0; }
  const std::vector<Edge>& edges() const { return edges_; }
  int edge_index(int gv0, int gv1) const {
    auto it = edge_index_.find(detail::edge_key(gv0, gv1));
    return it == edge_index_.end() ? -1 : it->second;
  }
  bool edge_on_boundary(int gv0, int gv1) const {
    const int e = edge_index(gv0, gv1);
    return e >= 0 && edges_[e].boundary;
  }

  /// Local element indices incident to global vertex gv, ascending.
  const std::vector<int>& elements_at_vertex(int gv) const {
    static const std::vector<int> empty;
    auto it = vertex_stars_.find(gv);
    return it == vertex_stars_.end() ? empty : it->second;
  }

  /// Element across edge (gv0, gv1) from element e, or -1.
  int neighbor(int e, int gv0, int gv1) const {
    const int ei = edge_index(gv0, gv1);
    if (ei < 0) return -1;
    const Edge& ed = edges_[ei];
    if (ed.tri[0] == e) return ed.tri[1];
    if (ed.tri[1] == e) return ed.tri[0];
    return -1;
  }

  double total_area() const {
    double s = 0.0;
    for (int e = 0; e < n_elements(); ++e) s += element_area(e);
    return s;
  }

  double max_shape_ratio() const {
    double r = 0.0;
    for (int e = 0; e < n_elements(); ++e) {
      const auto c = element_coords(e);
      r = std::max(r, circumradius(c[0], c[1], c[2]) / inradius(c[0], c[1], c[2]));
    }
    return r;
  }

  /// Conformity audit: every edge is incident to one or two triangles, every
  /// element has positive area, and orientations are consistent.
  bool conforming() const {
    for (int e = 0; e < n_elements(); ++e)
      if (!(element_area(e) > 0.0)) return false;
    for (const Edge& ed : edges_)
      if (ed.tri[0] < 0) return false;
    // hanging-node check: every vertex used by an element must be a corner of
    // all elements whose closure contains it; with shared forests it suffices
    // that each edge has at most two incident triangles, which the edge table
    // enforces by construction, plus that no vertex lies strictly inside
    // another element's edge.
    for (int gv : vertex_ids_) {
      const Vec2 p = forest_->vertex(gv);
      for (const Edge& ed : edges_) {
        if (ed.v0 == gv || ed.v1 == gv) continue;
        const Vec2 a = forest_->vertex(ed.v0), b = forest_->vertex(ed.v1);
        const double len = (b - a).norm();
        const double cross = std::abs((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / len;
        const double t = (p - a).dot(b - a) / (len * len);
        if (cross < 1e-13 && t > 1e-10 && t < 1.0 - 1e-10) return false;
      }
    }
    return true;
  }

  /// Element whose closure contains p (smallest local index wins), or -1.
  int locate(const Vec2& p, double tol = 1e-12) const {
    for (int e = 0; e < n_elements(); ++e) {
      const auto c = element_coords(e);
      if (point_in_triangle(c[0], c[1], c[2], p, tol)) return e;
    }
    return -1;
  }

 private:
  void build_topology() {
    std::map<std::uint64_t, std::array<int, 2>> table;
    std::set<int> vset;
    for (int e = 0; e < n_elements(); ++e) {
      const auto& v = element_vertices(e);
      for (int k = 0; k < 3; ++k) vset.insert(v[k]);
      for (int k = 0; k < 3; ++k) {
        const auto key = detail::edge_key(v[k], v[(k + 1) % 3]);
        auto [it, fresh] = table.emplace(key, std::array<int, 2>{e, -1});
        if (!fresh) {
          if (it->second[1] != -1)
            throw std::runtime_error("mesh: edge incident to more than two triangles");
          it->second[1] = e;
        }
      }
    }
    vertex_ids_.assign(vset.begin(), vset.end());
    for (std::size_t i = 0; i < vertex_ids_.size(); ++i) vertex_local_[vertex_ids_[i]] = int(i);
    edges_.reserve(table.size());
    for (const auto& [key, tris] : table) {
      Edge ed;
      ed.v0 = int(key >> 32);
      ed.v1 = int(key & 0xffffffffu);
      ed.tri[0] = tris[0];
      ed.tri[1] = tris[1];
      ed.boundary = tris[1] < 0;
      edge_index_[key] = int(edges_.size());
      edges_.push_back(ed);
      if (ed.boundary) {
        boundary_vertices_.insert(ed.v0);
        boundary_vertices_.insert(ed.v1);
      }
    }
    for (int e = 0; e < n_elements(); ++e)
      for (int k = 0; k < 3; ++k) vertex_stars_[element_vertices(e)[k]].push_back(e);
    for (auto& [gv, star] : vertex_stars_) std::sort(star.begin(), star.end());
  }

  std::shared_ptr<Forest> forest_;
  std::vector<int> elems_;
  std::vector<int> vertex_ids_;
  std::unordered_map<int, int> vertex_local_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, int> edge_index_;
  std::unordered_map<int, std::vector<int>> vertex_stars_;
  std::unordered_set<int> boundary_vertices_;
};

namespace detail {

/// Mutable working set for conforming bisection with recursive closure.
class RefinementWorkspace {
 public:
  RefinementWorkspace(Forest& forest, const std::vector<int>& elems) : forest_(forest) {
    for (int id : elems) insert(id);
  }

  void refine(int node_id) {
    int guard = 0;
    refine_impl(node_id, guard);
  }

  std::vector<int> result() const {
    std::vector<int> out(members_.begin(), members_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  bool contains(int id) const { return members_.count(id) > 0; }

 private:
  void refine_impl(int node_id, int& guard) {
    if (++guard > 4 * int(members_.size()) + 64)
      throw std::runtime_error("bisect: closure did not terminate (incompatible root edges)");
    while (contains(node_id)) {
      const auto& n = forest_.node(node_id);
      const int a = n.v[1], b = n.v[2];
      const int nb = neighbor_across(node_id, a, b);
      if (nb >= 0) {
        const auto& m = forest_.node(nb);
        if (!(std::min(m.v[1], m.v[2]) == std::min(a, b) &&
              std::max(m.v[1], m.v[2]) == std::max(a, b))) {
          refine_impl(nb, guard);
          continue;  // neighbor across (a,b) is now compatible
        }
        bisect_member(nb);
      }
      bisect_member(node_id);
      return;
    }
  }

  void bisect_member(int id) {
    forest_.ensure_children(id);
    erase(id);
    const auto& n = forest_.node(id);
    insert(n.child[0]);
    insert(n.child[1]);
  }

  int neighbor_across(int id, int va, int vb) const {
    const auto key = edge_key(va, vb);
    auto it = edge_members_.find(key);
    if (it == edge_members_.end()) return -1;
    for (int cand : it->second)
      if (cand != id) return cand;
    return -1;
  }

  void insert(int id) {
    members_.insert(id);
    const auto& v = forest_.node(id).v;
    for (int k = 0; k < 3; ++k) edge_members_[edge_key(v[k], v[(k + 1) % 3])].push_back(id);
  }

  void erase(int id) {
    members_.erase(id);
    const auto& v = forest_.node(id).v;
    for (int k = 0; k < 3; ++k) {
      auto& lst = edge_members_[edge_key(v[k], v[(k + 1) % 3])];
      lst.erase(std::remove(lst.begin(), lst.end(), id), lst.end());
    }
  }

  Forest& forest_;
  std::unordered_set<int> members_;
  std::unordered_map<std::uint64_t, std::vector<int>> edge_members_;
};

}  // namespace detail

/// Conforming newest-vertex bisection of all marked elements (by local index),
/// with recursive closure. An empty mark set returns an identical mesh.
inline SimplicialMesh bisect(const SimplicialMesh& mesh, const std::vector<int>& marked) {
  for (int e : marked)
    if (e < 0 || e >= mesh.n_elements()) throw std::invalid_argument("bisect: marked element out of range");
  detail::RefinementWorkspace ws(*mesh.forest_ptr(), mesh.element_nodes());
  std::vector<int> mark_nodes;
  mark_nodes.reserve(marked.size());
  for (int e : marked) mark_nodes.push_back(mesh.element_node(e));
  std::sort(mark_nodes.begin(), mark_nodes.end());
  mark_nodes.erase(std::unique(mark_nodes.begin(), mark_nodes.end()), mark_nodes.end());
  for (int id : mark_nodes)
    if (ws.contains(id)) ws.refine(id);
  return SimplicialMesh(mesh.forest_ptr(), ws.result());
}

/// Replaces sibling pairs by their parent where this keeps the mesh
/// conforming: the refinement-edge midpoint must be used only by the children
/// of the candidate parents around it. Marked elements are candidates; never
/// coarsens past forest roots.
inline SimplicialMesh coarsen(const SimplicialMesh& mesh, const std::vector<int>& marked) {
  const Forest& forest = mesh.forest();
  std::unordered_set<int> mark_nodes;
  for (int e : marked) mark_nodes.insert(mesh.element_node(e));
  std::unordered_set<int> members(mesh.element_nodes().begin(), mesh.element_nodes().end());

  // candidate parents: both children are marked members
  std::map<int, std::vector<int>> by_midpoint;  // midpoint vertex -> parents
  std::set<int> parents;
  for (int id : mesh.element_nodes()) {
    const int p = forest.node(id).parent;
    if (p < 0 || parents.count(p)) continue;
    const auto& pn = forest.node(p);
    if (mark_nodes.count(pn.child[0]) && mark_nodes.count(pn.child[1]) &&
        members.count(pn.child[0]) && members.count(pn.child[1])) {
      parents.insert(p);
      by_midpoint[forest.node(pn.child[0]).v[0]].push_back(p);
    }
  }

  // vertex usage count in the current mesh
  std::unordered_map<int, int> vertex_use;
  for (int id : mesh.element_nodes())
    for (int v : forest.node(id).v) ++vertex_use[v];

  std::vector<int> elems = mesh.element_nodes();
  for (const auto& [mid, plist] : by_midpoint) {
    if (vertex_use[mid] != 2 * int(plist.size())) continue;  // someone else uses the midpoint
    for (int p : plist) {
      const auto& pn = forest.node(p);
      elems.erase(std::remove(elems.begin(), elems.end(), pn.child[0]), elems.end());
      elems.erase(std::remove(elems.begin(), elems.end(), pn.child[1]), elems.end());
      elems.push_back(p);
    }
  }
  return SimplicialMesh(mesh.forest_ptr(), elems);
}

/// Common refinement (forest join) of two meshes from the same forest, with
/// containment maps into both inputs.
struct Overlay {
  std::shared_ptr<const SimplicialMesh> mesh;
  std::vector<int> parent_in_a;  // local element index in a, per overlay element
  std::vector<int> parent_in_b;
};

inline Overlay common_refinement(const SimplicialMesh& a, const SimplicialMesh& b) {
  if (a.forest_ptr().get() != b.forest_ptr().get())
    throw std::invalid_argument("common_refinement: meshes from different forests");
  const Forest& forest = a.forest();
  std::unordered_set<int> in_b(b.element_nodes().begin(), b.element_nodes().end());
  std::unordered_set<int> anc_b;  // strict ancestors of b's elements
  for (int id : b.element_nodes()) {
    int p = forest.node(id).parent;
    while (p >= 0 && anc_b.insert(p).second) p = forest.node(p).parent;
  }

  std::vector<int> elems;
  auto emit = [&](auto&& self, int id) -> void {
    if (in_b.count(id) || !anc_b.count(id)) {
      elems.push_back(id);
      return;
    }
    // b is strictly deeper below id; geometry guarantees children exist
    const auto& n = forest.node(id);
    self(self, n.child[0]);
    self(self, n.child[1]);
  };
  for (int id : a.element_nodes()) emit(emit, id);

  Overlay ov;
  auto join = std::make_shared<SimplicialMesh>(a.forest_ptr(), elems);
  ov.mesh = join;
  ov.parent_in_a.resize(ov.mesh->n_elements());
  ov.parent_in_b.resize(ov.mesh->n_elements());
  for (int e = 0; e < ov.mesh->n_elements(); ++e) {
    int id = ov.mesh->element_node(e);
    int pa = id, pb = id;
    while (a.local_element(pa) < 0) pa = forest.node(pa).parent;
    while (b.local_element(pb) < 0) pb = forest.node(pb).parent;
    ov.parent_in_a[e] = a.local_element(pa);
    ov.parent_in_b[e] = b.local_element(pb);
  }
  return ov;
}

/// Trivial overlay of a mesh with itself (identity parent maps).
inline Overlay self_overlay(const std::shared_ptr<const SimplicialMesh>& m) {
  Overlay ov;
  ov.mesh = m;
  ov.parent_in_a.resize(m->n_elements());
  ov.parent_in_b.resize(m->n_elements());
  for (int e = 0; e < m->n_elements(); ++e) ov.parent_in_a[e] = ov.parent_in_b[e] = e;
  return ov;
}

/// Hat function of mesh vertex gv evaluated at p; 0 outside the vertex star.
inline double hat_value(const SimplicialMesh& mesh, int gv, const Vec2& p) {
  for (int e : mesh.elements_at_vertex(gv)) {
    const auto c = mesh.element_coords(e);
    const auto l = barycentric(c[0], c[1], c[2], p);
    if (l[0] >= -1e-12 && l[1] >= -1e-12 && l[2] >= -1e-12) {
      const auto& v = mesh.element_vertices(e);
      for (int k = 0; k < 3; ++k)
        if (v[k] == gv) return std::clamp(l[k], 0.0, 1.0);
    }
  }
  return 0.0;
}

/// Vertex patch omega_a of `mesh` tiled by sub-elements of `refined` (an
/// overlay mesh with parent map into `mesh`).
struct VertexPatch {
  int vertex = -1;                  // forest vertex id
  bool interior = true;
  std::vector<int> coarse_elements; // local in mesh, ascending
  std::vector<int> sub_elements;    // local in refined mesh, ascending
  std::vector<int> sub_parent;      // coarse element per sub-element
  double diameter = 0.0;
  int degree = 0;                   // p_a

  /// psi_a restricted to sub-element k (affine there).
  AffineScalar hat_on_sub(const SimplicialMesh& mesh, int k) const {
    const auto c = mesh.element_coords(sub_parent.at(k));
    const auto g = barycentric_gradients(c[0], c[1], c[2]);
    const auto& v = mesh.element_vertices(sub_parent.at(k));
    for (int i = 0; i < 3; ++i)
      if (v[i] == vertex) return AffineScalar{1.0, c[i], g[i]};
    throw std::logic_error("patch: vertex not in parent element");
  }
};

inline VertexPatch build_patch(const SimplicialMesh& mesh, const SimplicialMesh& refined,
                               const std::vector<int>& parent_map, int gv,
                               const std::vector<int>* sub_degrees = nullptr) {
  if (!mesh.uses_vertex(gv)) throw std::invalid_argument("build_patch: vertex not in mesh");
  VertexPatch patch;
  patch.vertex = gv;
  patch.interior = !mesh.vertex_on_boundary(gv);
  patch.coarse_elements = mesh.elements_at_vertex(gv);
  std::unordered_set<int> star(patch.coarse_elements.begin(), patch.coarse_elements.end());
  for (int e = 0; e < refined.n_elements(); ++e) {
    if (!star.count(parent_map.at(e))) continue;
    patch.sub_elements.push_back(e);
    patch.sub_parent.push_back(parent_map[e]);
  }
  // diameter of the (star-shaped) union = max vertex-pair distance
  std::set<int> vs;
  for (int e : patch.sub_elements)
    for (int v : refined.element_vertices(e)) vs.insert(v);
  for (auto i = vs.begin(); i != vs.end(); ++i)
    for (auto j = std::next(i); j != vs.end(); ++j)
      patch.diameter = std::max(patch.diameter,
                                (refined.forest().vertex(*i) - refined.forest().vertex(*j)).norm());
  int pa = 1;
  for (std::size_t k = 0; k < patch.sub_elements.size(); ++k) {
    const int pk = sub_degrees ? sub_degrees->at(patch.sub_elements[k]) : 1;
    pa = std::max(pa, pk + 1);
  }
  patch.degree = pa;
  return patch;
}

// ---------------------------------------------------------------------------
// Built-in root meshes and text I/O
// ---------------------------------------------------------------------------

/// Unit square as two triangles; the shared diagonal is the refinement edge of
/// both, so recursive closure terminates.
inline std::shared_ptr<SimplicialMesh> make_unit_square_two(std::shared_ptr<Forest> forest) {
  const int v0 = forest->add_vertex({0, 0});
  const int v1 = forest->add_vertex({1, 0});
  const int v2 = forest->add_vertex({1, 1});
  const int v3 = forest->add_vertex({0, 1});
  std::vector<int> ids;
  ids.push_back(forest->add_root(v0, v1, v3));  // refinement edge (v1,v3): the diagonal
  ids.push_back(forest->add_root(v2, v3, v1));
  return std::make_shared<SimplicialMesh>(std::move(forest), ids);
}

/// n x n criss-cross mesh of the unit square: each cell is split into four
/// triangles around its center; refinement edges are the cell boundary edges.
inline std::shared_ptr<SimplicialMesh> make_crisscross(std::shared_ptr<Forest> forest, int n) {
  std::vector<std::vector<int>> grid(n + 1, std::vector<int>(n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) grid[j][i] = forest->add_vertex({double(i) / n, double(j) / n});
  std::vector<int> ids;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int c = forest->add_vertex({(i + 0.5) / n, (j + 0.5) / n});
      const int v00 = grid[j][i], v10 = grid[j][i + 1], v11 = grid[j + 1][i + 1],
                v01 = grid[j + 1][i];
      ids.push_back(forest->add_root(c, v00, v10));  // bottom
      ids.push_back(forest->add_root(c, v10, v11));  // right
      ids.push_back(forest->add_root(c, v11, v01));  // top
      ids.push_back(forest->add_root(c, v01, v00));  // left
    }
  return std::make_shared<SimplicialMesh>(std::move(forest), ids);
}

inline void write_mesh(const SimplicialMesh& mesh, std::ostream& os) {
  os << "dim=2 nv=" << mesh.n_vertices() << " nt=" << mesh.n_elements() << "\n";
  os.precision(17);
  std::unordered_map<int, int> local;
  for (std::size_t i = 0; i < mesh.vertex_ids().size(); ++i) {
    const int gv = mesh.vertex_ids()[i];
    local[gv] = int(i);
    const Vec2& p = mesh.forest().vertex(gv);
    os << p.x() << " " << p.y() << "\n";
  }
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& v = mesh.element_vertices(e);
    int marker = 0;
    for (int k = 0; k < 3; ++k)
      if (mesh.edge_on_boundary(v[k], v[(k + 1) % 3])) marker = 1;
    os << local[v[0]] << " " << local[v[1]] << " " << local[v[2]] << " " << marker << "\n";
  }
}

/// Reads the text format, placing the triangles as fresh roots of `forest`
/// with the longest edge (ties: lowest opposite vertex index) as refinement
/// edge.
inline std::shared_ptr<SimplicialMesh> read_mesh(std::shared_ptr<Forest> forest,
                                                 std::istream& is) {
  std::string header;
  std::getline(is, header);
  int nv = -1, nt = -1;
  if (std::sscanf(header.c_str(), "dim=2 nv=%d nt=%d", &nv, &nt) != 2 || nv < 3 || nt < 1)
    throw std::runtime_error("read_mesh: bad header");
  std::vector<int> verts(nv);
  for (int i = 0; i < nv; ++i) {
    double x, y;
    if (!(is >> x >> y)) throw std::runtime_error("read_mesh: bad vertex line");
    verts[i] = forest->add_vertex({x, y});
  }
  std::vector<int> ids;
  for (int t = 0; t < nt; ++t) {
    int a, b, c, marker;
    if (!(is >> a >> b >> c >> marker)) throw std::runtime_error("read_mesh: bad triangle line");
    std::array<int, 3> v = {verts.at(a), verts.at(b), verts.at(c)};
    if (signed_area(forest->vertex(v[0]), forest->vertex(v[1]), forest->vertex(v[2])) < 0.0)
      std::swap(v[1], v[2]);
    // choose the refinement edge: longest, ties by lowest opposite vertex
    int peak = 0;
    double best = -1.0;
    for (int k = 0; k < 3; ++k) {
      const double len =
          (forest->vertex(v[(k + 1) % 3]) - forest->vertex(v[(k + 2) % 3])).norm();
      if (len > best + 1e-14 || (std::abs(len - best) <= 1e-14 && v[k] < v[peak])) {
        best = len;
        peak = k;
      }
    }
    ids.push_back(forest->add_root(v[peak], v[(peak + 1) % 3], v[(peak + 2) % 3]));
  }
  return std::make_shared<SimplicialMesh>(std::move(forest), ids);
}

}  // namespace parest
