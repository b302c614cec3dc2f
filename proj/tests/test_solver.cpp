#include "parest/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace parest;

namespace {

std::shared_ptr<SimplicialMesh> crisscross(int n) {
  return make_crisscross(std::make_shared<Forest>(), n);
}

std::shared_ptr<SimplicialMesh> share(SimplicialMesh m) {
  return std::make_shared<SimplicialMesh>(std::move(m));
}

std::vector<int> all_elements(const SimplicialMesh& m) {
  std::vector<int> v(m.n_elements());
  for (int i = 0; i < m.n_elements(); ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("zero data gives the zero solution") {
  auto space = std::make_shared<FESpace>(crisscross(2), 1);
  auto disc = Discretization::uniform(TimePartition::uniform(1.0, 3, 1), space);
  auto u = solve_heat(
      disc, [](const Vec2&, double) { return 0.0; }, [](const Vec2&) { return 0.0; });
  CHECK(u.initial.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& m : u.modes) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
  auto iu = reconstruct(u);
  const double r = verify_equivalent_form(disc, 0, u, iu, [](const Vec2&, double) { return 0.0; });
  CHECK(r == 0.0);
}

TEST_CASE("dG(0) coincides with a hand-coded backward Euler step") {
  auto space = std::make_shared<FESpace>(crisscross(2), 2);
  const int nsteps = 4;
  auto disc = Discretization::uniform(TimePartition::uniform(0.8, nsteps, 0), space);
  auto f = [](const Vec2& x, double t) {
    return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()) * std::exp(-t) + x.x() * t;
  };
  auto u0 = [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); };
  auto u = solve_heat(disc, f, u0);

  // independent stepping: (M + tau A) u^n = M u^{n-1} + int_{I_n} f dt
  const SparseMat& M = space->mass();
  const SparseMat& A = space->stiffness();
  Vector prev = space->project_L2(u0);
  const double tau = disc.partition.tau(0);
  Eigen::SimplicialLDLT<SparseMat> lu(SparseMat(M + tau * A));
  REQUIRE(lu.info() == Eigen::Success);
  for (int s = 0; s < nsteps; ++s) {
    const Matrix load = assemble_load(disc, s, f, data_quadrature(disc, s));
    const Vector next = lu.solve(M * prev + load.col(0));
    const double scale = next.cwiseAbs().maxCoeff();
    CHECK((u.modes[s].col(0) - next).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    prev = next;
  }
}

TEST_CASE("dG(1) reproduces a solution that is linear in time") {
  auto space = std::make_shared<FESpace>(crisscross(2), 2);
  auto disc = Discretization::uniform(TimePartition::uniform(1.0, 2, 1), space);
  std::mt19937 rng(41);
  std::normal_distribution<double> N(0.0, 1.0);
  Vector phi(space->n_dofs());
  for (int i = 0; i < phi.size(); ++i) phi[i] = N(rng);
  // discrete Laplacian w = M^{-1} A phi makes f = phi + (1+t) w the residual-
  // free load for the exact solution u = (1+t) phi
  Eigen::SimplicialLDLT<SparseMat> mass(space->mass());
  const Vector w = mass.solve(space->stiffness() * phi);
  auto f = [&](const Vec2& x, double t) {
    const int e = space->mesh().locate(x);
    return space->evaluate(phi, e, x) + (1.0 + t) * space->evaluate(w, e, x);
  };
  auto u0 = [&](const Vec2& x) {
    const int e = space->mesh().locate(x);
    return space->evaluate(phi, e, x);
  };
  auto u = solve_heat(disc, f, u0);

  const double scale = phi.cwiseAbs().maxCoeff();
  for (int s = 0; s < disc.n_steps(); ++s) {
    // Legendre modes of (1+t) phi on I_s: mode 0 = (1+midpoint) phi, mode 1 = (tau/2) phi
    const double mid = 0.5 * (disc.partition.t(s) + disc.partition.t(s + 1));
    const double half = 0.5 * disc.partition.tau(s);
    CHECK((u.modes[s].col(0) - (1.0 + mid) * phi).cwiseAbs().maxCoeff() <= 1e-11 * scale);
    CHECK((u.modes[s].col(1) - half * phi).cwiseAbs().maxCoeff() <= 1e-11 * scale);
    CHECK(u.jump(s).cwiseAbs().maxCoeff() <= 1e-11 * scale);
  }
}

TEST_CASE("reconstruction of a time-continuous function is the identity") {
  auto space = std::make_shared<FESpace>(crisscross(1), 1);
  auto disc = Discretization::uniform(TimePartition::uniform(1.0, 2, 1), space);
  SpaceTimeFunction u;
  u.disc = &disc;
  u.initial = Vector::Ones(space->n_dofs());
  for (int s = 0; s < 2; ++s) {
    Matrix m = Matrix::Zero(space->n_dofs(), 2);
    m.col(0) = Vector::Ones(space->n_dofs());
    u.modes.push_back(m);
  }
  auto iu = reconstruct(u);
  for (int s = 0; s < 2; ++s) {
    CHECK((iu.modes[s].col(0) - u.modes[s].col(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(iu.modes[s].col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(iu.modes[s].col(2).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dG(0) reconstruction is the affine interpolant") {
  auto space = std::make_shared<FESpace>(crisscross(1), 1);
  REQUIRE(space->n_dofs() == 1);
  auto disc = Discretization::uniform(TimePartition::uniform(0.5, 1, 0), space);
  SpaceTimeFunction u;
  u.disc = &disc;
  u.initial = Vector::Constant(1, 2.0);            // u^0
  u.modes.push_back(Matrix::Constant(1, 1, 5.0));  // u^1
  auto iu = reconstruct(u);
  const Vec2 xc(0.5, 0.5);  // center vertex: value = coefficient
  const int e = disc.slabs[0].overlay->locate(xc);
  for (double t : {0.0, 0.1, 0.25, 0.4, 0.5}) {
    const double expect = 2.0 + t / 0.5 * (5.0 - 2.0);
    CHECK(iu.evaluate(0, e, xc, t) == Catch::Approx(expect).margin(1e-13));
  }
}

TEST_CASE("reconstruction endpoints match the traces for random data") {
  auto space = std::make_shared<FESpace>(crisscross(2), 2);
  auto disc = Discretization::uniform(TimePartition::uniform(1.5, 3, 2), space);
  std::mt19937 rng(57);
  std::normal_distribution<double> N(0.0, 1.0);
  SpaceTimeFunction u;
  u.disc = &disc;
  u.initial = Vector::Zero(space->n_dofs());
  for (int i = 0; i < u.initial.size(); ++i) u.initial[i] = N(rng);
  for (int s = 0; s < 3; ++s) {
    Matrix m(space->n_dofs(), 3);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = N(rng);
    u.modes.push_back(m);
  }
  auto iu = reconstruct(u);
  const double scale = u.initial.cwiseAbs().maxCoeff();
  for (int s = 0; s < 3; ++s) {
    Vector right = Vector::Zero(iu.modes[s].rows());
    Vector left = Vector::Zero(iu.modes[s].rows());
    for (int j = 0; j < iu.modes[s].cols(); ++j) {
      right += legendre_left_value(j) * iu.modes[s].col(j);
      left += iu.modes[s].col(j);
    }
    const StepSlab& slab = disc.slabs[s];
    const Vector expect_right = slab.prolong_prev * u.value_at_node(s);
    const Vector expect_left = slab.prolong_cur * u.trace_left(s + 1);
    CHECK((right - expect_right).cwiseAbs().maxCoeff() <= 1e-13 * scale);
    CHECK((left - expect_left).cwiseAbs().maxCoeff() <= 1e-13 * scale);
  }
}

TEST_CASE("equivalent-form residual is small for solutions and detects perturbations") {
  auto space = std::make_shared<FESpace>(crisscross(2), 1);
  auto disc = Discretization::uniform(TimePartition::uniform(1.0, 2, 1), space);
  auto f = [](const Vec2& x, double t) { return std::cos(3.0 * t) * x.x() * x.y(); };
  auto u0 = [](const Vec2& x) { return x.x() * (1.0 - x.x()) * x.y() * (1.0 - x.y()); };
  auto u = solve_heat(disc, f, u0);
  auto iu = reconstruct(u);
  for (int s = 0; s < disc.n_steps(); ++s)
    CHECK(verify_equivalent_form(disc, s, u, iu, f) <= 1e-11);

  SpaceTimeFunction bad = u;
  bad.modes[1](0, 0) += 1e-3;
  auto ibad = reconstruct(bad);
  CHECK(verify_equivalent_form(disc, 1, bad, ibad, f) > 1e-5);
}

TEST_CASE("reconstruction is continuous across nodes with mesh change") {
  auto mesh0 = crisscross(1);
  auto mesh1 = share(bisect(*mesh0, all_elements(*mesh0)));
  auto mesh2 = share(bisect(*mesh1, {0, 1}));
  auto s0 = std::make_shared<FESpace>(mesh0, 2);
  auto s1 = std::make_shared<FESpace>(mesh1, 2);
  auto s2 = std::make_shared<FESpace>(mesh2, 1);
  auto disc = Discretization::build(TimePartition::uniform(1.0, 2, 1), {s0, s1, s2});
  auto f = [](const Vec2& x, double t) { return std::sin(2.0 * t + x.x()) * x.y(); };
  auto u0 = [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); };
  auto u = solve_heat(disc, f, u0);
  auto iu = reconstruct(u);
  for (int s = 0; s < disc.n_steps(); ++s)
    CHECK(verify_equivalent_form(disc, s, u, iu, f) <= 1e-11);

  std::mt19937 rng(71);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double t1 = disc.partition.t(1);
  double scale = 0.0;
  for (const auto& m : iu.modes) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 50; ++trial) {
    const Vec2 x(U(rng), U(rng));
    const int e0 = disc.slabs[0].overlay->locate(x);
    const int e1 = disc.slabs[1].overlay->locate(x);
    if (e0 < 0 || e1 < 0) continue;
    const double left = iu.evaluate(0, e0, x, t1);
    const double right = iu.evaluate(1, e1, x, t1);
    CHECK(std::abs(left - right) <= 1e-13 * std::max(1.0, scale));
    ++checked;
  }
  REQUIRE(checked == 50);

  // Iu(0) equals the projected initial datum
  Vector right0 = Vector::Zero(iu.modes[0].rows());
  for (int j = 0; j < iu.modes[0].cols(); ++j)
    right0 += legendre_left_value(j) * iu.modes[0].col(j);
  const Vector expect0 = disc.slabs[0].prolong_prev * u.initial;
  CHECK((right0 - expect0).cwiseAbs().maxCoeff() <= 1e-13 * u.initial.cwiseAbs().maxCoeff());
}

TEST_CASE("step systems factor for time steps spanning six decades") {
  auto space = std::make_shared<FESpace>(crisscross(1), 2);
  for (int q = 0; q <= 3; ++q)
    for (double tau : {1e-6, 1e-4, 1e-2, 1.0}) {
      auto disc = Discretization::uniform(TimePartition::uniform(tau, 1, q), space);
      CHECK_NOTHROW(build_step_operator(disc, 0));
    }
}
