#pragma once

// Linearized state system around (m_bar, U_bar):
//
//   z_t - lap z - z x lap m - m x lap z - z x u + 2 (m . z) m + (1 + |m|^2) z
//       = zeta(dU) + m x zeta(dU),   z(0) = 0,
//
// discretized with the same IMEX stage structure as the forward solver, so
// solve_tangent is the exact derivative of the discrete control-to-state map.

#include <span>
#include <utility>
#include <vector>

#include "llb/coils.hpp"
#include "llb/grid.hpp"
#include "llb/state.hpp"

namespace llb {

struct LinearizationPoint {
  const Trajectory& state;
  const ControlPath& control;
  const CoilSet& coils;
};

/// z = G'(U_bar)[dU].
Trajectory solve_tangent(const LinearizationPoint& point, const ControlPath& dU,
                         const SolverOptions& opts = {});

struct TaylorStudy {
  std::vector<double> eps;
  /// max_k || m(U + eps dU) - m(U) - eps z ||_{H1}
  std::vector<double> remainder;
  /// max_k || m(U + eps dU) - m(U) ||_{H1}
  std::vector<double> first_difference;
  /// Least-squares log-log slopes; NaN when a series contains zeros.
  double remainder_slope = 0.0;
  double first_difference_slope = 0.0;
};

/// Fréchet check of the control-to-state map along dU.
TaylorStudy taylor_remainder_order(const StateProblem& problem, const ControlPath& base,
                                   const ControlPath& dU, std::span<const double> eps);

/// Least-squares slope of log(y) against log(x); NaN if any y <= 0.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct LipschitzEstimate {
  double ratio = 0.0;  // max ||G(U1) - G(U2)|| / ||U1 - U2||
  std::size_t informative_pairs = 0;
  bool informative() const noexcept { return informative_pairs > 0; }
};

/// Empirical lower bound for sqrt(C2) in ||G(U1)-G(U2)||_M <= sqrt(C2) ||U1-U2||,
/// measuring the state in max-over-frames H1 and controls with norm_rms.
/// Pairs with U1 == U2 are skipped.
LipschitzEstimate estimate_state_lipschitz(
    const StateProblem& problem, std::span<const std::pair<ControlPath, ControlPath>> pairs);

}  // namespace llb
