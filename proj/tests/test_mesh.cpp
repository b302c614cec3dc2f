#include "parest/mesh.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace parest;

namespace {

std::shared_ptr<SimplicialMesh> square2() { return make_unit_square_two(std::make_shared<Forest>()); }

bool inside(const SimplicialMesh& child_mesh, int ce, const SimplicialMesh& parent_mesh, int pe) {
  const auto c = child_mesh.element_coords(ce);
  const auto p = parent_mesh.element_coords(pe);
  for (const Vec2& x : c)
    if (!point_in_triangle(p[0], p[1], p[2], x, 1e-12)) return false;
  return true;
}

std::vector<int> all_elements(const SimplicialMesh& m) {
  std::vector<int> v(m.n_elements());
  for (int i = 0; i < m.n_elements(); ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("marking both triangles of the square bisects each once") {
  auto root = square2();
  auto fine = bisect(*root, {0, 1});
  REQUIRE(fine.n_elements() == 4);
  CHECK(fine.conforming());
  for (int e = 0; e < fine.n_elements(); ++e) {
    bool contained = false;
    for (int pe = 0; pe < root->n_elements(); ++pe) contained |= inside(fine, e, *root, pe);
    CHECK(contained);
  }
  CHECK(fine.total_area() == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("closure keeps the mesh conforming when one triangle is marked") {
  auto root = square2();
  auto once = bisect(*root, {0, 1});
  // marking a single child forces closure across the interior edges
  auto fine = bisect(once, {0});
  CHECK(fine.conforming());
  CHECK(fine.total_area() == Catch::Approx(1.0).epsilon(1e-14));
  // audit: every interior edge shared by exactly two triangles
  for (const auto& ed : fine.edges()) {
    if (!ed.boundary) CHECK(ed.tri[1] >= 0);
  }
}

TEST_CASE("empty mark set returns the identical mesh") {
  auto root = square2();
  auto same = bisect(*root, {});
  REQUIRE(same.n_elements() == root->n_elements());
  for (int e = 0; e < same.n_elements(); ++e)
    CHECK(same.element_node(e) == root->element_node(e));
}

TEST_CASE("repeated refinement keeps shape regularity bounded") {
  auto mesh = *square2();
  const double root_ratio = mesh.max_shape_ratio();
  std::mt19937 rng(7);
  for (int round = 0; round < 6; ++round) {
    std::vector<int> marked;
    for (int e = 0; e < mesh.n_elements(); ++e)
      if (rng() % 3 == 0) marked.push_back(e);
    if (marked.empty()) marked.push_back(0);
    mesh = bisect(mesh, marked);
    CHECK(mesh.conforming());
    CHECK(mesh.max_shape_ratio() <= 2.0 * root_ratio + 1e-12);
  }
}

TEST_CASE("common refinement is idempotent") {
  auto root = square2();
  auto a = bisect(*root, {0});
  auto ov = common_refinement(a, a);
  REQUIRE(ov.mesh->n_elements() == a.n_elements());
  for (int e = 0; e < a.n_elements(); ++e) {
    CHECK(ov.mesh->element_node(e) == a.element_node(e));
    CHECK(ov.parent_in_a[e] == e);
    CHECK(ov.parent_in_b[e] == e);
  }
}

TEST_CASE("common refinement with the root is the finer mesh") {
  auto root = square2();
  auto a = bisect(*root, {0, 1});
  auto ov = common_refinement(a, *root);
  REQUIRE(ov.mesh->n_elements() == a.n_elements());
  // parent maps checked by sampling random interior points
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0.1, 0.9);
  for (int e = 0; e < ov.mesh->n_elements(); ++e) {
    const auto c = ov.mesh->element_coords(e);
    for (int trial = 0; trial < 20; ++trial) {
      const double u = U(rng), v = U(rng) * (1.0 - u);
      const Vec2 x = c[0] + u * (c[1] - c[0]) + v * (c[2] - c[0]);
      const auto pa = a.element_coords(ov.parent_in_a[e]);
      const auto pb = root->element_coords(ov.parent_in_b[e]);
      CHECK(point_in_triangle(pa[0], pa[1], pa[2], x));
      CHECK(point_in_triangle(pb[0], pb[1], pb[2], x));
    }
  }
}

TEST_CASE("overlay of meshes refined in disjoint regions") {
  auto root = square2();
  auto base = bisect(*root, all_elements(*root));
  auto a = bisect(base, {0});
  auto b = bisect(base, {base.n_elements() - 1});
  auto ov = common_refinement(a, b);
  CHECK(ov.mesh->conforming());
  CHECK(ov.mesh->total_area() == Catch::Approx(1.0).epsilon(1e-14));
  for (int e = 0; e < ov.mesh->n_elements(); ++e) {
    CHECK(inside(*ov.mesh, e, a, ov.parent_in_a[e]));
    CHECK(inside(*ov.mesh, e, b, ov.parent_in_b[e]));
  }
  // commutativity at the level of element sets
  auto vo = common_refinement(b, a);
  REQUIRE(vo.mesh->n_elements() == ov.mesh->n_elements());
  for (int e = 0; e < ov.mesh->n_elements(); ++e)
    CHECK(vo.mesh->element_node(e) == ov.mesh->element_node(e));
}

TEST_CASE("different forests are rejected") {
  auto a = square2();
  auto b = square2();
  CHECK_THROWS(common_refinement(*a, *b));
}

TEST_CASE("interior vertex patch tiles the vertex star") {
  auto cross = make_crisscross(std::make_shared<Forest>(), 2);
  const auto ov = self_overlay(cross);
  // find an interior vertex
  int gv = -1;
  for (int v : cross->vertex_ids())
    if (!cross->vertex_on_boundary(v)) gv = v;
  REQUIRE(gv >= 0);
  const auto patch = build_patch(*cross, *cross, ov.parent_in_a, gv);
  CHECK(patch.interior);
  double star_area = 0.0, patch_area = 0.0;
  for (int e : patch.coarse_elements) star_area += cross->element_area(e);
  for (int e : patch.sub_elements) patch_area += cross->element_area(e);
  CHECK(patch_area == Catch::Approx(star_area).epsilon(1e-14));
  CHECK(patch.degree == 2);  // default degree-1 sub-elements
}

TEST_CASE("boundary corner patch of the two-triangle square") {
  auto root = square2();
  const auto ov = self_overlay(root);
  // vertex 0 = (0,0) belongs to exactly one triangle
  const auto patch = build_patch(*root, *root, ov.parent_in_a, 0);
  CHECK_FALSE(patch.interior);
  CHECK(patch.coarse_elements.size() == 1);
  CHECK(patch.sub_elements.size() == 1);
  CHECK_THROWS(build_patch(*root, *root, ov.parent_in_a, 999));
}

TEST_CASE("patch on a refined mesh stays inside the coarse star") {
  auto root = square2();
  auto coarse = bisect(*root, all_elements(*root));
  auto fine = bisect(coarse, all_elements(coarse));
  fine = bisect(fine, {0, 3});
  auto ov = common_refinement(coarse, fine);
  for (int gv : coarse.vertex_ids()) {
    const auto patch = build_patch(coarse, *ov.mesh, ov.parent_in_a, gv);
    CHECK(patch.sub_elements.size() >= patch.coarse_elements.size());
    for (std::size_t k = 0; k < patch.sub_elements.size(); ++k)
      CHECK(inside(*ov.mesh, patch.sub_elements[k], coarse, patch.sub_parent[k]));
  }
}

TEST_CASE("hat functions are a nodal partition of unity") {
  auto mesh = *make_crisscross(std::make_shared<Forest>(), 2);
  mesh = bisect(mesh, {1, 5, 9});
  for (int gv : mesh.vertex_ids()) {
    CHECK(hat_value(mesh, gv, mesh.forest().vertex(gv)) == Catch::Approx(1.0).margin(1e-14));
    for (int gw : mesh.vertex_ids())
      if (gw != gv)
        CHECK(hat_value(mesh, gv, mesh.forest().vertex(gw)) == Catch::Approx(0.0).margin(1e-14));
  }
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 x(U(rng), U(rng));
    double s = 0.0;
    for (int gv : mesh.vertex_ids()) s += hat_value(mesh, gv, x);
    CHECK(std::abs(s - 1.0) <= 1e-13);
  }
}

TEST_CASE("coarsening undoes refinement when legal") {
  auto root = make_crisscross(std::make_shared<Forest>(), 2);
  auto fine = bisect(*root, all_elements(*root));
  auto back = coarsen(fine, all_elements(fine));
  REQUIRE(back.n_elements() == root->n_elements());
  for (int e = 0; e < back.n_elements(); ++e) CHECK(back.element_node(e) == root->element_node(e));
  // coarsening the root is a no-op
  auto still = coarsen(*root, all_elements(*root));
  CHECK(still.n_elements() == root->n_elements());
}

TEST_CASE("partial coarsening keeps conformity") {
  auto root = square2();
  auto m1 = bisect(*root, all_elements(*root));
  auto m2 = bisect(m1, all_elements(m1));
  // try to coarsen only part of the mesh; result must stay conforming
  std::vector<int> marked;
  for (int e = 0; e < m2.n_elements() / 2; ++e) marked.push_back(e);
  auto c = coarsen(m2, marked);
  CHECK(c.conforming());
  CHECK(c.total_area() == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mesh text format round-trips exactly") {
  auto root = make_crisscross(std::make_shared<Forest>(), 2);
  auto mesh = bisect(*root, {0, 2, 7});
  std::stringstream ss;
  write_mesh(mesh, ss);
  auto forest2 = std::make_shared<Forest>();
  auto mesh2 = read_mesh(forest2, ss);
  REQUIRE(mesh2->n_elements() == mesh.n_elements());
  REQUIRE(mesh2->n_vertices() == mesh.n_vertices());
  std::stringstream ss2;
  write_mesh(*mesh2, ss2);
  std::stringstream ss3;
  write_mesh(mesh, ss3);
  CHECK(ss2.str() == ss3.str());
  CHECK(mesh2->total_area() == Catch::Approx(mesh.total_area()).epsilon(1e-15));
}
