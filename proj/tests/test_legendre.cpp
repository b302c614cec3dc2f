#include "parest/legendre.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace parest;

namespace {
TimePartition sample_partition() {
  // nonuniform steps, mixed degrees
  return TimePartition({0.0, 0.25, 1.0, 1.5, 3.0}, {0, 1, 2, 3});
}
}  // namespace

TEST_CASE("mapped Legendre polynomials are 1 at the right endpoint") {
  const auto part = sample_partition();
  for (int s = 0; s < part.n_steps(); ++s)
    for (int q = 0; q <= 5; ++q)
      CHECK(legendre_eval(part, s, q, part.t(s + 1)) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("left endpoint value is (-1)^q") {
  const auto part = sample_partition();
  CHECK(legendre_eval(part, 1, 3, part.t(1)) == Catch::Approx(-1.0).margin(1e-14));
  for (int q = 0; q <= 6; ++q)
    CHECK(legendre_eval(part, 2, q, part.t(2)) ==
          Catch::Approx(legendre_left_value(q)).margin(1e-14));
}

TEST_CASE("L1 and L2 are orthogonal under quadrature") {
  const auto part = sample_partition();
  for (int s = 0; s < part.n_steps(); ++s) {
    const double tau = part.tau(s);
    double integral = 0.0;
    for (const auto& p : gauss_points(part.t(s), part.t(s + 1), 6))
      integral += p.w * legendre_eval(part, s, 1, p.x) * legendre_eval(part, s, 2, p.x);
    CHECK(std::abs(integral) <= 1e-14 * tau);
  }
}

TEST_CASE("closed-form Legendre mass") {
  const TimePartition unit({0.0, 1.0}, {1});
  CHECK(legendre_mass(unit, 0, 1) == Catch::Approx(1.0 / 3.0).margin(1e-16));
  const TimePartition quarter({0.0, 0.25}, {0});
  CHECK(legendre_mass(quarter, 0, 0) == Catch::Approx(0.25).margin(1e-16));
}

TEST_CASE("quadrature of |L_q|^2 matches tau/(2q+1)") {
  const auto part = sample_partition();
  for (int s = 0; s < part.n_steps(); ++s)
    for (int q = 0; q <= part.degree(s) + 2; ++q) {
      double integral = 0.0;
      for (const auto& p : gauss_points(part.t(s), part.t(s + 1), part.degree(s) + 3)) {
        const double v = legendre_eval(part, s, q, p.x);
        integral += p.w * v * v;
      }
      const double exact = legendre_mass(part, s, q);
      CHECK(std::abs(integral - exact) <= 1e-13 * exact);
    }
}

TEST_CASE("endpoint, orthogonality and mass properties with the step rule") {
  const auto part = sample_partition();
  for (int s = 0; s < part.n_steps(); ++s) {
    const int qn = part.degree(s);
    const auto rule = gauss_points(part.t(s), part.t(s + 1), qn + 3);
    for (int q = 0; q <= qn + 2; ++q) {
      CHECK(std::abs(legendre_eval(part, s, q, part.t(s + 1)) - 1.0) <= 1e-13);
      CHECK(std::abs(legendre_eval(part, s, q, part.t(s)) - legendre_left_value(q)) <= 1e-13);
      for (int r = 0; r < q && q + r <= 2 * (qn + 3) - 1; ++r) {
        double integral = 0.0;
        for (const auto& p : rule)
          integral += p.w * legendre_eval(part, s, q, p.x) * legendre_eval(part, s, r, p.x);
        CHECK(std::abs(integral) <= 1e-13 * part.tau(s));
      }
    }
  }
}

TEST_CASE("derivative pairing table matches quadrature") {
  const auto part = sample_partition();
  const int s = 1;
  for (int j = 0; j <= 4; ++j)
    for (int k = 0; k <= 4; ++k) {
      double integral = 0.0;
      for (const auto& p : gauss_points(part.t(s), part.t(s + 1), 8)) {
        // d/dt L_j via the modal expansion
        double dj = 0.0;
        for (int m = 0; m < j; ++m)
          dj += legendre_deriv_coeff(part, s, j, m) * legendre_eval(part, s, m, p.x);
        integral += p.w * dj * legendre_eval(part, s, k, p.x);
      }
      CHECK(std::abs(integral - legendre_deriv_pairing(j, k)) <= 1e-12);
    }
}

TEST_CASE("partition constructors validate input") {
  CHECK_THROWS(TimePartition({0.0, 0.5, 0.5}, {0, 0}));
  CHECK_THROWS(TimePartition({0.0, 1.0}, {-1}));
  const auto geo = TimePartition::geometric(1.0, 4, 2.0, 1);
  CHECK(geo.final_time() == Catch::Approx(1.0));
  CHECK(geo.tau(3) == Catch::Approx(2.0 * geo.tau(2)).epsilon(1e-12));
  CHECK_THROWS(geo.reference_coord(0, 0.9));
}
