#pragma once

// Tracking cost, adjoint-based reduced gradient and projected-gradient descent
// over box-constrained coil intensities.
//
//   J(m, U) = 1/2 int_0^T int |m - m_d|^2 + 1/2 int |m(T) - m_Omega|^2 + 1/2 sum_i ||U_i||^2
//
// Reduced gradient (L2(0,T;R^N) geometry):
//   g_i(t) = U_i(t) + int_Omega (phi x m + phi) . B_i dx.

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "llb/adjoint.hpp"
#include "llb/coils.hpp"
#include "llb/grid.hpp"
#include "llb/state.hpp"
#include "llb/tangent.hpp"

namespace llb {

struct TrackingTargets {
  /// m_d at every time node.
  std::vector<VectorField> desired;
  /// m_Omega.
  VectorField terminal;
};

struct CostBreakdown {
  double tracking = 0.0;
  double terminal = 0.0;
  double control = 0.0;
  double total = 0.0;
};

/// Cell sums in space, trapezoid in time. Throws InputError ("target/grid
/// incompatibility") when grids or time nodes disagree.
CostBreakdown evaluate_cost(const Trajectory& traj, const ControlPath& U,
                            const TrackingTargets& targets);

struct ControlProblem {
  StateProblem state;
  TrackingTargets targets;
};

/// I(U) = J(G(U), U).
CostBreakdown reduced_cost(const ControlProblem& problem, const ControlPath& U);

enum class GradientMode {
  /// Exact gradient of the discrete reduced cost: transpose-scheme adjoint,
  /// pairing averaged over the two IMEX steps a node's intensity enters.
  consistent,
  /// Nodewise continuous formula with the plain backward-Euler adjoint;
  /// differs from the discrete gradient by O(dt).
  continuous,
};

struct GradientResult {
  /// g = U + pairing, (K+1) x N row-major.
  std::vector<double> gradient;
  /// int_Omega (phi x m + phi) . B_i at every node.
  std::vector<double> pairing;
  CostBreakdown cost;
  Trajectory state;
  Trajectory adjoint;
};

/// Forward solve, tracking adjoint, and pairing with the coils.
GradientResult reduced_gradient(const ControlProblem& problem, const ControlPath& U,
                                GradientMode mode = GradientMode::consistent);
/// Same, reusing an already computed state G(U).
GradientResult reduced_gradient(const ControlProblem& problem, const ControlPath& U,
                                Trajectory state, GradientMode mode = GradientMode::consistent);

/// Tracking adjoint: g = -(m - m_d), phi(T) = m(T) - m_Omega.
Trajectory tracking_adjoint(const ControlProblem& problem, const ControlPath& U,
                            const Trajectory& state, AdjointScheme scheme);

/// Coil pairing int (phi x m + phi) . B_i for the given gradient mode.
std::vector<double> coil_pairing(const Trajectory& state, const Trajectory& adjoint,
                                 const CoilSet& coils, GradientMode mode);

/// (I(U + eps h) - I(U - eps h)) / (2 eps), no projection.
double directional_fd(const ControlProblem& problem, const ControlPath& U,
                      std::span<const double> direction, double eps);

/// ||U - P(U - s g)|| / sqrt(T) in the trapezoid L2(0,T;R^N) norm.
double natural_residual(const ControlPath& U, std::span<const double> gradient, double step);

struct DescentOptions {
  std::size_t max_iter = 500;
  double tol = 1e-6;
  /// s0 of the stopping metric.
  double reference_step = 1.0;
  /// First trial step of each line search.
  double initial_step = 1.0;
  double armijo_c1 = 1e-4;
  int max_halvings = 40;
  GradientMode mode = GradientMode::consistent;
};

struct DescentRecord {
  std::size_t iter = 0;
  CostBreakdown cost;
  double residual = 0.0;
  /// Step accepted to reach this iterate (0 for the start point).
  double step = 0.0;
};

struct DescentResult {
  ControlPath control;
  std::vector<DescentRecord> history;
  bool converged = false;
  std::size_t iterations = 0;
};

using DescentObserver = std::function<void(const DescentRecord&)>;

/// Projected gradient with Armijo backtracking. Throws
/// SolverError(stalled_descent) after max_halvings failed halvings.
DescentResult projected_gradient_descent(const ControlProblem& problem, const ControlPath& U0,
                                         const DescentOptions& opts = {},
                                         const DescentObserver& observer = {});

/// ||Phi(U1)-Phi(U2)||_Z / ||U1-U2|| maximized over pairs, with the costate
/// measured as (||.||^2_{Linf L2} + ||.||^2_{L2 H1})^{1/2}.
LipschitzEstimate estimate_costate_lipschitz(
    const ControlProblem& problem, std::span<const std::pair<ControlPath, ControlPath>> pairs,
    GradientMode mode = GradientMode::consistent);

/// The costate proxy norm used above.
double costate_norm(const Trajectory& phi);

}  // namespace llb
