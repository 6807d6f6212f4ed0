#include <cmath>
#include <random>

#include "doctest.h"
#include "llb/tangent.hpp"
#include "support/checks.hpp"
#include "support/problems.hpp"

using namespace llb;
using namespace llb::testing;

namespace {

ControlPath random_increment(const ControlPath& like, std::mt19937_64& rng, double scale) {
  return like.with_values(random_vector(like.values().size(), rng, scale));
}

double max_h1(const Trajectory& z) { return max_frame_norm(z, Norm::H1); }

}  // namespace

TEST_SUITE("tangent") {
  TEST_CASE("zero increment gives zero") {
    const ControlProblem p = tracking_problem(Grid::line(16), 0.2, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    const Trajectory z = solve_tangent({m, U, p.state.coils}, p.state.zero_control(-5, 5));
    CHECK(z.frame_count() == m.frame_count());
    CHECK(max_abs(z) == 0.0);
  }

  TEST_CASE("linear response around the zero state") {
    // Base m = 0, U = 0: z' + z = u0 with z(0) = 0, so z(t) = u0 (1 - e^{-t}).
    const Grid g = Grid::square(4);
    CoilSet c(g);
    c.add(uniform_coil(g, {1, 0, 0}));
    const double dt = 1e-3;
    const ControlPath U(1001, 1, dt);
    const Trajectory m = simulate(VectorField(g), U, c, {1.0, dt, {}, {}});
    ControlPath dU(1001, 1, dt);
    for (double& v : dU.values()) v = 1.0;
    const Trajectory z = solve_tangent({m, U, c}, dU);
    const double expected = 1.0 - std::exp(-1.0);
    CHECK(expected == doctest::Approx(0.63212).epsilon(1e-5));
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      CHECK(std::abs(z.back()[n].x - expected) <= 1e-3);
      CHECK(z.back()[n].y == 0.0);
      CHECK(z.back()[n].z == 0.0);
    }
  }

  TEST_CASE("tangent is linear in the increment") {
    const ControlProblem p = tracking_problem(Grid::square(8), 0.2, 1e-2);
    const ControlPath U = smooth_control(p);
    const Trajectory m = p.state.solve(U);
    std::mt19937_64 rng(4);
    const ControlPath a = random_increment(U, rng, 1.0), b = random_increment(U, rng, 1.0);
    ControlPath combo = a;
    for (std::size_t i = 0; i < combo.values().size(); ++i)
      combo.values()[i] = 2.0 * a.values()[i] - 3.0 * b.values()[i];
    const LinearizationPoint pt{m, U, p.state.coils};
    const Trajectory za = solve_tangent(pt, a), zb = solve_tangent(pt, b),
                     zc = solve_tangent(pt, combo);
    double worst = 0.0;
    for (std::size_t k = 0; k < zc.frame_count(); ++k) {
      VectorField expected = 2.0 * za[k];
      expected.axpy(-3.0, zb[k]);
      worst = std::max(worst, max_abs_diff(zc[k], expected));
    }
    CHECK(worst <= 1e-12 * std::max(1.0, max_abs(zc)));
  }

  TEST_CASE("tangent is the derivative of the discrete control-to-state map") {
    const ControlProblem p = tracking_problem(Grid::line(32), 0.3, 1e-2);
    const ControlPath U = smooth_control(p, 1.0);
    const Trajectory m = p.state.solve(U);
    std::mt19937_64 rng(12);
    const ControlPath dU = random_increment(U, rng, 1.0);
    const Trajectory z = solve_tangent({m, U, p.state.coils}, dU);
    auto central = [&](double eps) {
      ControlPath up = U, dn = U;
      for (std::size_t i = 0; i < U.values().size(); ++i) {
        up.values()[i] += eps * dU.values()[i];
        dn.values()[i] -= eps * dU.values()[i];
      }
      Trajectory d = difference(p.state.solve(up), p.state.solve(dn));
      double err = 0.0;
      for (std::size_t k = 0; k < d.frame_count(); ++k) {
        d[k] *= 1.0 / (2 * eps);
        err = std::max(err, max_abs_diff(d[k], z[k]));
      }
      return err;
    };
    const double e1 = central(1e-2), e2 = central(5e-3);
    CHECK(e1 <= 1e-4 * max_abs(z));
    // Central differences carry an eps^2 error against the exact derivative.
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
  }

  TEST_CASE("Taylor remainder is quadratic") {
    const ControlProblem p = tracking_problem(Grid::line(32), 0.5, 1e-3);
    const ControlPath U = smooth_control(p);
    std::mt19937_64 rng(6);
    const ControlPath dU = random_increment(U, rng, 1.0);
    const std::vector<double> eps{1e-1, 1e-2, 1e-3};
    const TaylorStudy s = taylor_remainder_order(p.state, U, dU, eps);
    CHECK(s.remainder.size() == 3);
    CHECK(s.remainder_slope >= 1.9);
    CHECK(s.first_difference_slope == doctest::Approx(1.0).epsilon(0.05));
    for (std::size_t i = 0; i < eps.size(); ++i) CHECK(s.remainder[i] < s.first_difference[i]);
  }

  TEST_CASE("Taylor study with a zero increment") {
    const ControlProblem p = tracking_problem(Grid::line(16), 0.1, 1e-2);
    const ControlPath U = smooth_control(p);
    const std::vector<double> eps{1e-1, 1e-2};
    const TaylorStudy s = taylor_remainder_order(p.state, U, p.state.zero_control(-5, 5), eps);
    for (double r : s.remainder) CHECK(r == 0.0);
    CHECK(std::isnan(s.remainder_slope));
  }

  TEST_CASE("log-log slope") {
    const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
    const std::vector<double> z{1, 0, 1, 1};
    CHECK(std::isnan(loglog_slope(x, z)));
  }

  TEST_CASE("state Lipschitz estimator") {
    const ControlProblem p = tracking_problem(Grid::line(16), 0.2, 1e-2);
    const ControlPath U0 = p.state.zero_control(-5, 5);

    SUBCASE("equal pairs are not informative") {
      const std::vector<std::pair<ControlPath, ControlPath>> pairs{{U0, U0}, {U0, U0}};
      const LipschitzEstimate e = estimate_state_lipschitz(p.state, pairs);
      CHECK(e.ratio == 0.0);
      CHECK_FALSE(e.informative());
    }

    SUBCASE("estimates are stable under doubling the sample") {
      std::mt19937_64 rng(77);
      std::vector<std::pair<ControlPath, ControlPath>> pairs;
      for (int i = 0; i < 16; ++i) {
        const ControlPath a = random_increment(U0, rng, 0.2);
        ControlPath b = a;
        for (std::size_t j = 0; j < b.values().size(); ++j)
          b.values()[j] += random_vector(1, rng, 0.2)[0];
        pairs.emplace_back(a, b);
      }
      const std::span<const std::pair<ControlPath, ControlPath>> all(pairs);
      const LipschitzEstimate half = estimate_state_lipschitz(p.state, all.first(8));
      const LipschitzEstimate full = estimate_state_lipschitz(p.state, all);
      CHECK(half.ratio > 0.0);
      CHECK(full.informative_pairs == 16);
      CHECK(std::abs(full.ratio - half.ratio) <= 0.1 * half.ratio);
    }

    SUBCASE("shrinking pairs approach the directional derivative") {
      const ControlPath U1 = smooth_control(p);
      std::mt19937_64 rng(5);
      const ControlPath dir = random_increment(U1, rng, 1.0);
      const Trajectory z = solve_tangent({p.state.solve(U1), U1, p.state.coils}, dir);
      const double limit = max_h1(z) / norm_rms(dir);
      double previous_gap = 1e300;
      for (double t : {1e-1, 1e-2, 1e-3}) {
        ControlPath U2 = U1;
        for (std::size_t j = 0; j < U2.values().size(); ++j) U2.values()[j] += t * dir.values()[j];
        const std::vector<std::pair<ControlPath, ControlPath>> pair{{U1, U2}};
        const double gap = std::abs(estimate_state_lipschitz(p.state, pair).ratio - limit);
        CHECK(gap < previous_gap);
        previous_gap = gap;
      }
      CHECK(previous_gap <= 1e-2 * limit);
    }
  }
}
