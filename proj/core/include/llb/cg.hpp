#pragma once

#include "llb/grid.hpp"

namespace llb {

struct CgOptions {
  /// Iterate until ||r|| <= target_tol * ||b||.
  double target_tol = 1e-13;
  /// Stagnating above target is tolerated down to this level; beyond it the solve fails.
  double accept_tol = 1e-10;
  int max_iter = 2000;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (I - dt lap_h) x = b by conjugate gradients, all three components at
/// once. `x` is used as the initial guess (resized to b's grid if needed).
/// Throws SolverError(implicit_solve) when accept_tol is not reached.
CgResult solve_implicit_diffusion(double dt, const VectorField& b, VectorField& x,
                                  const CgOptions& opts = {});

}  // namespace llb
