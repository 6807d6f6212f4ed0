#include <cmath>
#include <random>

#include "doctest.h"
#include "llb/coils.hpp"
#include "llb/errors.hpp"
#include "support/checks.hpp"
#include "support/problems.hpp"

using namespace llb;
using namespace llb::testing;

namespace {

ControlPath constant_path(std::size_t nodes, double dt, std::vector<double> row) {
  ControlPath U(nodes, row.size(), dt);
  for (std::size_t j = 0; j < nodes; ++j)
    for (std::size_t i = 0; i < row.size(); ++i) U(j, i) = row[i];
  return U;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("coils") {
  TEST_CASE("synthesize examples") {
    const Grid g = Grid::square(6);
    SUBCASE("single constant coil scales its geometry") {
      CoilSet c(g);
      c.add(uniform_coil(g, {1, 0, 0}));
      const ControlPath U = constant_path(3, 0.5, {2.0});
      CHECK(max_abs_diff(synthesize(U, c, 1), VectorField(g, {2, 0, 0})) == 0.0);
    }
    SUBCASE("empty coil set gives the zero field") {
      const CoilSet c(g);
      const ControlPath U(3, 0, 0.5);
      CHECK(max_abs(synthesize(U, c, 2)) == 0.0);
    }
    SUBCASE("opposite intensities on identical coils cancel") {
      CoilSet c(g);
      const VectorField b = gaussian_coil(g, {0.4, 0.6, 0.5}, 0.2, 0);
      c.add(b);
      c.add(b);
      const ControlPath U = constant_path(2, 1.0, {1.0, -1.0});
      CHECK(max_abs(synthesize(U, c, 0)) == 0.0);
    }
  }

  TEST_CASE("grid and coil-count mismatches are rejected") {
    const Grid g = Grid::line(8);
    CoilSet c(g);
    CHECK_THROWS_WITH_AS(c.add(uniform_coil(Grid::line(9), {1, 0, 0})),
                         doctest::Contains("coil/grid incompatibility"), InputError);
    c.add(uniform_coil(g, {1, 0, 0}));
    const ControlPath U(2, 2, 1.0);
    CHECK_THROWS_AS(synthesize(U, c, 0), InputError);
  }

  TEST_CASE("gaussian coil matches its closed form") {
    const Grid g = Grid::square(10);
    const VectorField b = gaussian_coil(g, {0.3, 0.7, 0.5}, 0.15, 2);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      const auto x = g.center(n);
      const double r2 = (x[0] - 0.3) * (x[0] - 0.3) + (x[1] - 0.7) * (x[1] - 0.7);
      const double expected = std::exp(-r2 / (2 * 0.15 * 0.15));
      CHECK(b[n].x == 0.0);
      CHECK(b[n].y == 0.0);
      CHECK(b[n].z == doctest::Approx(expected).epsilon(1e-14));
    }
  }

  TEST_CASE("synthesize is linear in the intensities") {
    const Grid g = Grid::square(8);
    const CoilSet c = two_coils(g);
    std::mt19937_64 rng(3);
    ControlPath U(5, 2, 0.25), V(5, 2, 0.25);
    U.values() = random_vector(10, rng);
    V.values() = random_vector(10, rng);
    const double alpha = 1.7, beta = -0.6;
    ControlPath W(5, 2, 0.25);
    for (std::size_t i = 0; i < 10; ++i) W.values()[i] = alpha * U.values()[i] + beta * V.values()[i];
    for (std::size_t j = 0; j < 5; ++j) {
      VectorField expected = alpha * synthesize(U, c, j);
      expected.axpy(beta, synthesize(V, c, j));
      const VectorField got = synthesize(W, c, j);
      CHECK(max_abs_diff(got, expected) <= 1e-12 * std::max(1.0, max_abs(expected)));
    }
  }

  TEST_CASE("step control is the midpoint of the two nodes") {
    const Grid g = Grid::line(4);
    CoilSet c(g);
    c.add(uniform_coil(g, {0, 1, 0}));
    ControlPath U(3, 1, 0.5);
    U(0, 0) = 1.0;
    U(1, 0) = 3.0;
    U(2, 0) = -1.0;
    CHECK(max_abs_diff(step_control(U, c, 0), VectorField(g, {0, 2, 0})) == 0.0);
    CHECK(max_abs_diff(step_control(U, c, 1), VectorField(g, {0, 1, 0})) == 0.0);
    CHECK(max_abs_diff(step_control(U, c, 2), VectorField(g, {0, -1, 0})) == 0.0);
  }

  TEST_CASE("zeta bound examples") {
    const Grid g = Grid::square(4);
    SUBCASE("zero intensities") {
      const CoilSet c = two_coils(g);
      const ControlPath U(11, 2, 0.1);
      CHECK(zeta_bound(U, c) == 0.0);
      CHECK(zeta_norm(U, c) == 0.0);
    }
    SUBCASE("single constant coil attains equality") {
      CoilSet c(g);
      c.add(uniform_coil(g, {1, 0, 0}));
      const ControlPath U = constant_path(11, 0.1, {1.0});
      CHECK(c.h1_norm(0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(zeta_bound(U, c) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(zeta_norm(U, c) == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("orthogonal constant coils are strictly inside the bound") {
      CoilSet c(g);
      c.add(uniform_coil(g, {1, 0, 0}));
      c.add(uniform_coil(g, {0, 1, 0}));
      const ControlPath U = constant_path(11, 0.1, {1.0, 1.0});
      // ||zeta|| = sqrt(2), bound = 1 * (1 + 1).
      CHECK(zeta_norm(U, c) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
      CHECK(zeta_bound(U, c) == doctest::Approx(2.0).epsilon(1e-13));
      CHECK(zeta_norm(U, c) < zeta_bound(U, c));
    }
  }

  TEST_CASE("zeta bound holds on random intensities") {
    const Grid g = Grid::square(8);
    const CoilSet c = two_coils(g);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      ControlPath U(21, 2, 0.05);
      U.values() = random_vector(U.values().size(), rng, 3.0);
      CHECK(zeta_norm(U, c) <= zeta_bound(U, c) * (1 + 1e-12));
    }
  }

  TEST_CASE("control norms") {
    const ControlPath U = constant_path(11, 0.1, {3.0, 4.0});
    CHECK(norm_rms(U) == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(norm_sum(U) == doctest::Approx(7.0).epsilon(1e-13));
    const std::vector<double> ones(22, 1.0);
    CHECK(control_inner(ones, ones, 2, 0.1) == doctest::Approx(2.0).epsilon(1e-13));
  }

  TEST_CASE("project_box examples") {
    const std::vector<double> lo{-1, -1, -1}, hi{1, 1, 1};
    const std::vector<double> x{0.5, 2.0, -3.0};
    const auto p = project_box(x, lo, hi);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 1.0);
    CHECK(p[2] == -1.0);
  }

  TEST_CASE("project_box is idempotent, feasible and non-expansive") {
    std::mt19937_64 rng(23);
    const std::size_t n = 200;
    std::vector<double> lo = random_vector(n, rng), hi(n);
    std::uniform_real_distribution<double> width(0.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) hi[i] = lo[i] + width(rng);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_vector(n, rng, 3.0);
      const auto y = random_vector(n, rng, 3.0);
      const auto px = project_box(x, lo, hi);
      const auto py = project_box(y, lo, hi);
      CHECK(project_box(px, lo, hi) == px);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(px[i] >= lo[i]);
        CHECK(px[i] <= hi[i]);
      }
      CHECK(l2_distance(px, py) <= l2_distance(x, y) + 1e-14);
    }
  }

  TEST_CASE("empty boxes are rejected") {
    const std::vector<double> x{0.0}, lo{1.0}, hi{-1.0};
    CHECK_THROWS_WITH_AS(project_box(x, lo, hi), doctest::Contains("empty box"), InputError);
    CHECK_THROWS_WITH_AS(ControlPath(3, 1, 0.5, 1.0, -1.0), doctest::Contains("empty box"),
                         InputError);
  }

  TEST_CASE("control path feasibility and projection") {
    ControlPath U(3, 1, 0.5, -1.0, 1.0);
    CHECK(U.feasible());
    U(1, 0) = 4.0;
    CHECK_FALSE(U.feasible());
    const ControlPath P = U.projected();
    CHECK(P.feasible());
    CHECK(P(1, 0) == 1.0);
    CHECK(U.final_time() == 1.0);
    CHECK(U.series(0) == std::vector<double>{0.0, 4.0, 0.0});
  }
}
