#include <cmath>
#include <random>

#include "doctest.h"
#include "llb/errors.hpp"
#include "llb/optimize.hpp"
#include "support/checks.hpp"
#include "support/problems.hpp"

using namespace llb;
using namespace llb::testing;

namespace {

Trajectory constant_trajectory(const Grid& g, double dt, std::size_t nodes, Vec3 v) {
  return Trajectory(g, dt, std::vector<VectorField>(nodes, VectorField(g, v)));
}

/// Targets equal to the state reached by U, so the adjoint vanishes at U.
ControlProblem matched_problem(const ControlProblem& p, const ControlPath& U) {
  ControlProblem q = p;
  const Trajectory m = p.state.solve(U);
  q.targets = {m.frames(), m.back()};
  return q;
}

double relative_fd_error(const ControlProblem& p, const ControlPath& U, GradientMode mode,
                         std::uint64_t seed) {
  const GradientResult G = reduced_gradient(p, U, mode);
  std::mt19937_64 rng(seed);
  const auto h = random_vector(U.values().size(), rng);
  const double exact = control_inner(G.gradient, h, U.coils(), U.dt());
  const double fd = directional_fd(p, U, h, 1e-4);
  return std::abs(exact - fd) / std::abs(fd);
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("cost examples") {
    const Grid g = Grid::square(4);
    const double dt = 0.1;
    SUBCASE("matched targets cost nothing") {
      const Trajectory m = constant_trajectory(g, dt, 11, {0.3, 0.1, -0.2});
      const CostBreakdown c = evaluate_cost(m, ControlPath(11, 1, dt), {m.frames(), m.back()});
      CHECK(c.total == 0.0);
    }
    SUBCASE("unit tracking residual") {
      const Trajectory m = constant_trajectory(g, dt, 11, {1, 0, 0});
      const TrackingTargets t{std::vector<VectorField>(11, VectorField(g)), m.back()};
      const CostBreakdown c = evaluate_cost(m, ControlPath(11, 1, dt), t);
      CHECK(c.tracking == doctest::Approx(0.5).epsilon(1e-13));
      CHECK(c.terminal == 0.0);
      CHECK(c.total == doctest::Approx(0.5).epsilon(1e-13));
    }
    SUBCASE("constant intensity") {
      const Trajectory m = constant_trajectory(g, dt, 11, {0, 0, 0});
      ControlPath U(11, 1, dt);
      for (double& v : U.values()) v = 2.0;
      const CostBreakdown c = evaluate_cost(m, U, {m.frames(), m.back()});
      CHECK(c.control == doctest::Approx(2.0).epsilon(1e-13));
      CHECK(c.total == doctest::Approx(2.0).epsilon(1e-13));
    }
    SUBCASE("terminal mismatch") {
      const Trajectory m = constant_trajectory(g, dt, 11, {0, 0, 0});
      const CostBreakdown c =
          evaluate_cost(m, ControlPath(11, 1, dt), {m.frames(), VectorField(g, {0, 2, 0})});
      CHECK(c.terminal == doctest::Approx(2.0).epsilon(1e-13));
    }
  }

  TEST_CASE("cost breakdown is consistent and nonnegative") {
    const ControlProblem p = tracking_problem(Grid::line(32), 0.3, 1e-2);
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
      ControlPath U = p.state.zero_control(-5, 5);
      U.values() = random_vector(U.values().size(), rng);
      const CostBreakdown c = reduced_cost(p, U);
      CHECK(c.tracking >= 0.0);
      CHECK(c.terminal >= 0.0);
      CHECK(c.control >= 0.0);
      CHECK(std::abs(c.total - (c.tracking + c.terminal + c.control)) <= 1e-12 * c.total);
    }
  }

  TEST_CASE("mismatched targets are rejected") {
    const Grid g = Grid::line(4);
    const Trajectory m = constant_trajectory(g, 0.1, 11, {0, 0, 0});
    const TrackingTargets few{std::vector<VectorField>(5, VectorField(g)), VectorField(g)};
    CHECK_THROWS_WITH_AS(evaluate_cost(m, ControlPath(11, 1, 0.1), few),
                         doctest::Contains("target/grid incompatibility"), InputError);
    const TrackingTargets other{std::vector<VectorField>(11, VectorField(Grid::line(5))),
                                VectorField(Grid::line(5))};
    CHECK_THROWS_AS(evaluate_cost(m, ControlPath(11, 1, 0.1), other), InputError);
  }

  TEST_CASE("zero tracking residual leaves the gradient equal to U") {
    const ControlProblem base = tracking_problem(Grid::line(16), 0.2, 1e-2);
    const ControlPath U = smooth_control(base);
    const ControlProblem p = matched_problem(base, U);
    for (auto mode : {GradientMode::consistent, GradientMode::continuous}) {
      const GradientResult G = reduced_gradient(p, U, mode);
      CHECK(max_abs(G.adjoint) == 0.0);
      CHECK(G.gradient == U.values());
    }
  }

  TEST_CASE("no coils gives an empty gradient and pure tracking cost") {
    const Grid g = Grid::line(16);
    ControlProblem p = tracking_problem(g, 0.2, 1e-2);
    p.state.coils = CoilSet(g);
    const ControlPath U(21, 0, 1e-2);
    const GradientResult G = reduced_gradient(p, U);
    CHECK(G.gradient.empty());
    CHECK(G.cost.control == 0.0);
    CHECK(G.cost.total == doctest::Approx(G.cost.tracking + G.cost.terminal));
    CHECK(G.cost.total > 0.0);
  }

  TEST_CASE("reduced gradient matches central differences") {
    const ControlProblem p = tracking_problem(Grid::line(64), 1.0, 1e-3);
    const ControlPath U = smooth_control(p);
    for (std::uint64_t seed : {1u, 2u}) {
      CHECK(relative_fd_error(p, U, GradientMode::consistent, seed) <= 1e-6);
      CHECK(relative_fd_error(p, U, GradientMode::continuous, seed) <= 1e-3);
    }
  }

  TEST_CASE("continuous gradient error shrinks with the step") {
    double previous = 1e300;
    for (double dt : {2e-3, 1e-3, 5e-4}) {
      const ControlProblem p = tracking_problem(Grid::line(32), 0.5, dt);
      ControlPath U = smooth_control(p);
      const GradientResult G = reduced_gradient(p, U, GradientMode::continuous);
      std::vector<double> h(U.values().size());
      for (std::size_t j = 0; j < U.nodes(); ++j) {
        const double t = dt * static_cast<double>(j);
        h[2 * j] = std::cos(t);
        h[2 * j + 1] = 1.0 - t;
      }
      const double fd = directional_fd(p, U, h, 1e-4);
      const double err = std::abs(control_inner(G.gradient, h, 2, dt) - fd) / std::abs(fd);
      CHECK(err < previous);
      previous = err;
    }
  }

  TEST_CASE("natural residual") {
    ControlPath U(11, 1, 0.1, -1.0, 1.0);
    const std::vector<double> zero(11, 0.0), two(11, 2.0);
    CHECK(natural_residual(U, zero, 1.0) == 0.0);
    // U = 0, g = 2: P(-2) = -1, residual 1 everywhere.
    CHECK(natural_residual(U, two, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(natural_residual(U, two, 0.25) == doctest::Approx(0.5).epsilon(1e-13));
  }

  TEST_CASE("descent returns immediately at a fixed point") {
    const ControlProblem base = tracking_problem(Grid::line(16), 0.2, 1e-2);
    const ControlPath U = base.state.zero_control(-5, 5);
    const ControlProblem p = matched_problem(base, U);
    const DescentResult r = projected_gradient_descent(p, U);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.history.size() == 1);
    CHECK(r.control.values() == U.values());
  }

  TEST_CASE("decoupled regime converges to the projection of zero") {
    const ControlProblem base = tracking_problem(Grid::line(16), 0.2, 1e-2);
    const ControlProblem p = matched_problem(base, base.state.zero_control(-5, 5));
    DescentOptions opts;
    opts.tol = 1e-9;
    const DescentResult r = projected_gradient_descent(p, smooth_control(p), opts);
    CHECK(r.converged);
    double worst = 0.0;
    for (double v : r.control.values()) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 1e-8);

    ControlPath shifted = smooth_control(p);
    shifted.lower().assign(shifted.lower().size(), 0.5);
    shifted.upper().assign(shifted.upper().size(), 2.0);
    const DescentResult rs = projected_gradient_descent(p, shifted, opts);
    CHECK(rs.converged);
    for (double v : rs.control.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-8));
  }

  TEST_CASE("descent on the tracking problem decreases the cost monotonically") {
    const ControlProblem p = tracking_problem(Grid::line(32), 0.5, 1e-2);
    std::vector<DescentRecord> seen;
    const DescentResult r = projected_gradient_descent(
        p, p.state.zero_control(-5, 5), {}, [&](const DescentRecord& rec) { seen.push_back(rec); });
    CHECK(r.converged);
    CHECK(r.history.back().residual <= 1e-6);
    CHECK(seen.size() == r.history.size());
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      CHECK(r.history[i].cost.total < r.history[i - 1].cost.total);
      CHECK(r.history[i].step > 0.0);
    }
    CHECK(r.control.feasible());
  }

  TEST_CASE("infeasible start is projected first") {
    const ControlProblem p = tracking_problem(Grid::line(16), 0.2, 1e-2);
    ControlPath U = p.state.zero_control(-1, 1);
    for (double& v : U.values()) v = 3.0;
    DescentOptions opts;
    opts.max_iter = 0;
    const DescentResult r = projected_gradient_descent(p, U, opts);
    CHECK(r.control.feasible());
    CHECK_FALSE(r.converged);
  }

  TEST_CASE("stalled line search is reported") {
    const ControlProblem p = tracking_problem(Grid::line(16), 0.2, 1e-2);
    DescentOptions opts;
    opts.initial_step = 1e8;
    opts.max_halvings = 2;
    const ControlPath U = p.state.zero_control(-std::numeric_limits<double>::infinity(),
                                               std::numeric_limits<double>::infinity());
    bool thrown = false;
    try {
      projected_gradient_descent(p, U, opts);
    } catch (const SolverError& e) {
      thrown = true;
      CHECK(e.kind() == SolverFailure::stalled_descent);
    }
    CHECK(thrown);
  }

  TEST_CASE("costate Lipschitz estimator") {
    const ControlProblem p = tracking_problem(Grid::line(16), 0.2, 1e-2);
    const ControlPath U = smooth_control(p);
    const std::vector<std::pair<ControlPath, ControlPath>> same{{U, U}};
    CHECK_FALSE(estimate_costate_lipschitz(p, same).informative());
    ControlPath V = U;
    for (double& v : V.values()) v += 0.1;
    const std::vector<std::pair<ControlPath, ControlPath>> pair{{U, V}};
    const LipschitzEstimate e = estimate_costate_lipschitz(p, pair);
    CHECK(e.informative_pairs == 1);
    CHECK(e.ratio > 0.0);
    CHECK(std::isfinite(e.ratio));
  }

  TEST_CASE("costate norm of a constant field") {
    const Grid g = Grid::square(4);
    const Trajectory phi = constant_trajectory(g, 0.1, 11, {0, 3, 4});
    // sup_t ||phi||_{L2} = 5, int_0^1 ||phi||_{H1}^2 = 25.
    CHECK(costate_norm(phi) == doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
  }
}
