#pragma once

// Backward solvers for the adjoint operator
//
//   E phi = phi_t + lap phi + lap(phi x m) + lap m x phi - phi x u
//           - (1 + |m|^2) phi - 2 (m . phi) m,
//
// i.e. E phi = g with phi(T) = phi_T. The tracking adjoint is the special case
// g = -(m - m_d), phi_T = m(T) - m_Omega.
//
// Backward IMEX Euler: after time reversal the own Laplacian is implicit and
// every coupling term is explicit, evaluated at the frame the backward step
// starts from (t_{k+1} when stepping t_{k+1} -> t_k). lap(phi x m) is lap_h
// applied to the nodewise cross product, which is the discrete counterpart of
// the weak form's grad(phi x m) . grad(theta) term.

#include <vector>

#include "llb/coils.hpp"
#include "llb/grid.hpp"
#include "llb/state.hpp"
#include "llb/tangent.hpp"

namespace llb {

enum class AdjointScheme {
  /// Plain backward Euler of the continuous adjoint system.
  continuous,
  /// Same interior recursion, but the first backward step is taken so the
  /// sweep is the exact transpose of the forward IMEX scheme with trapezoid
  /// time weights on the cost (the rhs at t_K enters with weight 1/2 and no
  /// coupling terms).
  transpose,
};

struct AdjointProblem {
  const Trajectory& base;
  const ControlPath& control;
  const CoilSet& coils;
  /// g at every time node (K+1 frames); empty means g = 0.
  std::vector<VectorField> rhs;
  VectorField terminal;
};

Trajectory solve_adjoint(const AdjointProblem& problem, const SolverOptions& opts = {},
                         AdjointScheme scheme = AdjointScheme::continuous);

/// Right-hand side of the costate-derivative system at every node:
///   -lap(phi x z) - lap z x phi + phi x zeta(dU) + 2 (m . z) phi
///   + 2 (z . phi) m + 2 (m . phi) z - z
std::vector<VectorField> costate_derivative_rhs(const LinearizationPoint& point,
                                                const Trajectory& z, const Trajectory& phi,
                                                const ControlPath& dU);

/// phi' = Phi'(U)[dU]: the adjoint operator with costate_derivative_rhs and
/// terminal value z(T). z from solve_tangent and phi from solve_adjoint at the
/// same point.
Trajectory solve_costate_derivative(const LinearizationPoint& point, const Trajectory& z,
                                    const Trajectory& phi, const ControlPath& dU,
                                    const SolverOptions& opts = {});

}  // namespace llb
