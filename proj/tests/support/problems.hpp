#pragma once

// Small reference problems shared by the unit tests, the acceptance binary
// and the benchmarks.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "llb/coils.hpp"
#include "llb/grid.hpp"
#include "llb/optimize.hpp"
#include "llb/state.hpp"

namespace llb::testing {

/// Field with f(x) evaluated at every node center.
inline VectorField sample(const Grid& g, const std::function<Vec3(double, double, double)>& f) {
  VectorField out(g);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const auto c = g.center(n);
    out[n] = f(c[0], c[1], c[2]);
  }
  return out;
}

inline VectorField random_field(const Grid& g, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  VectorField out(g);
  for (std::size_t n = 0; n < g.node_count(); ++n) out[n] = {d(rng), d(rng), d(rng)};
  return out;
}

inline std::vector<double> random_vector(std::size_t size, std::mt19937_64& rng,
                                         double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(size);
  for (double& x : v) x = d(rng);
  return v;
}

/// Smooth Neumann-compatible initial magnetization.
inline VectorField smooth_initial(const Grid& g) {
  constexpr double pi = std::numbers::pi;
  return sample(g, [&](double x, double y, double) {
    return Vec3{0.3 + 0.2 * std::cos(pi * x) * std::cos(pi * y), 0.1 * std::cos(2 * pi * x),
                0.05};
  });
}

/// Different initial data generating the desired trajectory.
inline VectorField target_initial(const Grid& g) {
  constexpr double pi = std::numbers::pi;
  return sample(g, [&](double x, double y, double) {
    return Vec3{0.2, 0.3 * std::cos(pi * x), 0.1 + 0.1 * std::cos(pi * y)};
  });
}

/// Two Gaussian coils acting along y and z.
inline CoilSet two_coils(const Grid& g) {
  CoilSet c(g);
  std::array<double, 3> c1{0.3, 0.5, 0.5}, c2{0.7, 0.5, 0.5};
  c.add(gaussian_coil(g, c1, 0.15, 1));
  c.add(gaussian_coil(g, c2, 0.15, 2));
  return c;
}

/// Tracking problem: targets from an uncontrolled run started at target_initial.
inline ControlProblem tracking_problem(const Grid& g, double final_time, double dt) {
  StateProblem state{smooth_initial(g), two_coils(g), SimConfig{final_time, dt, {}, {}}};
  StateProblem reference = state;
  reference.m0 = target_initial(g);
  const Trajectory md = reference.solve(reference.zero_control(-5.0, 5.0));
  TrackingTargets targets{md.frames(), md.back()};
  return ControlProblem{std::move(state), std::move(targets)};
}

/// Smooth nonzero intensity path on the problem's time grid, bounds [-5, 5].
inline ControlPath smooth_control(const ControlProblem& p, double amplitude = 0.5) {
  ControlPath U = p.state.zero_control(-5.0, 5.0);
  for (std::size_t j = 0; j < U.nodes(); ++j) {
    const double t = U.dt() * static_cast<double>(j);
    U(j, 0) = amplitude * std::sin(2.0 * t + 0.3);
    U(j, 1) = amplitude * std::cos(3.0 * t);
  }
  return U;
}

}  // namespace llb::testing
