#include <cmath>
#include <random>

#include "doctest.h"
#include "llb/adjoint.hpp"
#include "llb/errors.hpp"
#include "support/checks.hpp"
#include "support/problems.hpp"

using namespace llb;
using namespace llb::testing;

namespace {

CoilSet unit_coil(const Grid& g) {
  CoilSet c(g);
  c.add(uniform_coil(g, {1, 0, 0}));
  return c;
}

ControlPath constant_path(std::size_t nodes, double dt, double value) {
  ControlPath U(nodes, 1, dt);
  for (double& v : U.values()) v = value;
  return U;
}

std::vector<VectorField> random_frames(const Grid& g, std::size_t n, std::mt19937_64& rng) {
  std::vector<VectorField> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_field(g, rng));
  return out;
}

struct DualityTerms {
  double pairing = 0.0;   // int <zeta + m x zeta, phi>
  double boundary = 0.0;  // <phi_T, z(T)> - int <g, z>
};

/// Both sides of the integration-by-parts identity for the tracking data of p.
DualityTerms duality_terms(double dt) {
  const ControlProblem p = tracking_problem(Grid::line(64), 1.0, dt);
  const ControlPath U = smooth_control(p);
  const Trajectory m = p.state.solve(U);
  ControlPath dU = U;
  for (std::size_t j = 0; j < dU.nodes(); ++j) {
    const double t = dt * static_cast<double>(j);
    dU(j, 0) = std::cos(t);
    dU(j, 1) = 1.0 - t;
  }
  const Trajectory z = solve_tangent({m, U, p.state.coils}, dU);
  std::vector<VectorField> g;
  for (std::size_t k = 0; k < m.frame_count(); ++k) g.push_back(p.targets.desired[k] - m[k]);
  const VectorField phi_T = m.back() - p.targets.terminal;
  const Trajectory phi = solve_adjoint({m, U, p.state.coils, g, phi_T});
  std::vector<double> lhs(m.frame_count()), gz(m.frame_count());
  for (std::size_t k = 0; k < m.frame_count(); ++k) {
    const VectorField zeta = synthesize(dU, p.state.coils, k);
    lhs[k] = inner(zeta + cross(m[k], zeta), phi[k]);
    gz[k] = inner(g[k], z[k]);
  }
  return {time_integral(lhs, dt), inner(phi_T, z.back()) - time_integral(gz, dt)};
}

}  // namespace

TEST_SUITE("adjoint") {
  TEST_CASE("homogeneous data gives zero") {
    const ControlProblem p = tracking_problem(Grid::square(8), 0.2, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    for (auto scheme : {AdjointScheme::continuous, AdjointScheme::transpose}) {
      const Trajectory phi =
          solve_adjoint({m, U, p.state.coils, {}, VectorField(m.grid())}, {}, scheme);
      CHECK(phi.frame_count() == m.frame_count());
      CHECK(max_abs(phi) == 0.0);
    }
  }

  TEST_CASE("constant tracking residual backward from zero") {
    // m = 0, U = 0, g = m_d = e1, phi(T) = 0: phi' - phi = 1, so phi(t) = e^{t-T} - 1.
    const Grid g = Grid::square(4);
    const double dt = 1e-3;
    const CoilSet c = unit_coil(g);
    const ControlPath U(1001, 1, dt);
    const Trajectory m = simulate(VectorField(g), U, c, {1.0, dt, {}, {}});
    const std::vector<VectorField> rhs(1001, VectorField(g, {1, 0, 0}));
    const Trajectory phi = solve_adjoint({m, U, c, rhs, VectorField(g)});
    const double expected = std::exp(-1.0) - 1.0;
    CHECK(expected == doctest::Approx(-0.63212).epsilon(1e-5));
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      CHECK(std::abs(phi[0][n].x - expected) <= 1e-3);
      CHECK(phi[0][n].y == 0.0);
      CHECK(phi[0][n].z == 0.0);
    }
  }

  TEST_CASE("superposition in the data") {
    const ControlProblem p = tracking_problem(Grid::line(32), 0.2, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    std::mt19937_64 rng(9);
    const auto g1 = random_frames(m.grid(), m.frame_count(), rng);
    const auto g2 = random_frames(m.grid(), m.frame_count(), rng);
    const VectorField t1 = random_field(m.grid(), rng), t2 = random_field(m.grid(), rng);
    std::vector<VectorField> g3;
    for (std::size_t k = 0; k < g1.size(); ++k) g3.push_back(2.0 * g1[k] - 0.5 * g2[k]);
    for (auto scheme : {AdjointScheme::continuous, AdjointScheme::transpose}) {
      const Trajectory a = solve_adjoint({m, U, p.state.coils, g1, t1}, {}, scheme);
      const Trajectory b = solve_adjoint({m, U, p.state.coils, g2, t2}, {}, scheme);
      const Trajectory c =
          solve_adjoint({m, U, p.state.coils, g3, 2.0 * t1 - 0.5 * t2}, {}, scheme);
      double worst = 0.0;
      for (std::size_t k = 0; k < c.frame_count(); ++k)
        worst = std::max(worst, max_abs_diff(c[k], 2.0 * a[k] - 0.5 * b[k]));
      CHECK(worst <= 1e-12 * std::max(1.0, max_abs(c)));
    }
  }

  TEST_CASE("transpose sweep is the exact discrete transpose of the tangent") {
    const ControlProblem p = tracking_problem(Grid::square(8), 0.3, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    std::mt19937_64 rng(31);
    const ControlPath dU = U.with_values(random_vector(U.values().size(), rng));
    const Trajectory z = solve_tangent({m, U, p.state.coils}, dU);
    const auto g = random_frames(m.grid(), m.frame_count(), rng);
    const VectorField phi_T = random_field(m.grid(), rng);
    const Trajectory phi =
        solve_adjoint({m, U, p.state.coils, g, phi_T}, {}, AdjointScheme::transpose);
    double forcing = 0.0;
    for (std::size_t k = 0; k < m.steps(); ++k) {
      const VectorField zeta = step_control(dU, p.state.coils, k);
      forcing += m.dt() * inner(phi[k], zeta + cross(m[k], zeta));
    }
    std::vector<double> gz(m.frame_count());
    for (std::size_t k = 0; k < m.frame_count(); ++k) gz[k] = inner(g[k], z[k]);
    const double boundary = inner(phi_T, z.back()) - time_integral(gz, m.dt());
    CHECK(std::abs(forcing - boundary) <= 1e-10 * std::max(1.0, std::abs(boundary)));
  }

  TEST_CASE("continuous duality identity holds to first order") {
    const DualityTerms coarse = duality_terms(1e-3);
    const DualityTerms fine = duality_terms(5e-4);
    const double e1 = std::abs(coarse.pairing - coarse.boundary) / std::abs(coarse.boundary);
    const double e2 = std::abs(fine.pairing - fine.boundary) / std::abs(fine.boundary);
    CHECK(e1 <= 1e-2);
    CHECK(e2 < e1);
    CHECK(e1 / e2 >= 1.8);
  }

  TEST_CASE("costate derivative around the zero state") {
    // m = 0, phi = 0, zeta(dU) = e1: z = 1 - e^{-t}, and psi' = psi - z with
    // psi(T) = z(T), so e^{-t} psi(t) = e^{-T} z(T) + int_t^T e^{-s} z(s) ds.
    const Grid g = Grid::square(4);
    const double dt = 1e-3, T = 1.0;
    const CoilSet c = unit_coil(g);
    const ControlPath U(1001, 1, dt);
    const Trajectory m = simulate(VectorField(g), U, c, {T, dt, {}, {}});
    const ControlPath dU = constant_path(1001, dt, 1.0);
    const LinearizationPoint pt{m, U, c};
    const Trajectory z = solve_tangent(pt, dU);
    const Trajectory phi(g, dt, std::vector<VectorField>(1001, VectorField(g)));
    const Trajectory psi = solve_costate_derivative(pt, z, phi, dU);
    auto exact = [&](double t) {
      const double zT = 1.0 - std::exp(-T);
      const double integral =
          (std::exp(-t) - std::exp(-T)) - 0.5 * (std::exp(-2 * t) - std::exp(-2 * T));
      return std::exp(t) * (std::exp(-T) * zT + integral);
    };
    for (std::size_t k : {std::size_t{0}, std::size_t{500}, std::size_t{1000}}) {
      const double expected = exact(dt * static_cast<double>(k));
      for (std::size_t n = 0; n < g.node_count(); ++n) {
        CHECK(std::abs(psi[k][n].x - expected) <= 1e-3);
        CHECK(psi[k][n].y == 0.0);
      }
    }
  }

  TEST_CASE("costate derivative is zero for a zero increment and linear otherwise") {
    const ControlProblem p = tracking_problem(Grid::line(32), 0.2, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    std::vector<VectorField> g;
    for (std::size_t k = 0; k < m.frame_count(); ++k) g.push_back(p.targets.desired[k] - m[k]);
    const Trajectory phi = solve_adjoint({m, U, p.state.coils, g, m.back() - p.targets.terminal});
    const LinearizationPoint pt{m, U, p.state.coils};

    const ControlPath zero = p.state.zero_control(-5, 5);
    const Trajectory psi0 = solve_costate_derivative(pt, solve_tangent(pt, zero), phi, zero);
    CHECK(max_abs(psi0) == 0.0);

    std::mt19937_64 rng(2);
    const ControlPath a = U.with_values(random_vector(U.values().size(), rng));
    const ControlPath b = U.with_values(random_vector(U.values().size(), rng));
    ControlPath ab = a;
    for (std::size_t i = 0; i < ab.values().size(); ++i)
      ab.values()[i] = 1.5 * a.values()[i] + 0.5 * b.values()[i];
    const Trajectory pa = solve_costate_derivative(pt, solve_tangent(pt, a), phi, a);
    const Trajectory pb = solve_costate_derivative(pt, solve_tangent(pt, b), phi, b);
    const Trajectory pab = solve_costate_derivative(pt, solve_tangent(pt, ab), phi, ab);
    double worst = 0.0;
    for (std::size_t k = 0; k < pab.frame_count(); ++k)
      worst = std::max(worst, max_abs_diff(pab[k], 1.5 * pa[k] + 0.5 * pb[k]));
    CHECK(worst <= 1e-12 * std::max(1.0, max_abs(pab)));
  }

  TEST_CASE("mismatched data is rejected") {
    const ControlProblem p = tracking_problem(Grid::line(8), 0.1, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    const std::vector<VectorField> short_rhs(3, VectorField(m.grid()));
    CHECK_THROWS_AS(solve_adjoint({m, U, p.state.coils, short_rhs, VectorField(m.grid())}),
                    InputError);
    CHECK_THROWS_AS(solve_adjoint({m, U, p.state.coils, {}, VectorField(Grid::line(9))}),
                    InputError);
  }
}
