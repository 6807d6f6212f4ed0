#pragma once

// Forward solver for the controlled LLB system
//
//   m_t - lap m = m x lap m + m x u - (1 + |m|^2) m + u,   dm/dn = 0,  m(0) = m0,
//
// with u = sum_k U_k(t) B_k(x), advanced by first-order IMEX Euler: the
// Laplacian is implicit (CG on I - dt lap_h), everything else explicit.

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "llb/cg.hpp"
#include "llb/coils.hpp"
#include "llb/grid.hpp"

namespace llb {

struct SolverOptions {
  CgOptions cg;
  /// ||m||_inf above this counts as blow-up.
  double blowup_threshold = 1e6;
  /// Warn when dt (1 + ||m||_inf^2) exceeds this.
  double stability_warning = 0.5;
  /// Receives runtime warnings; silent when empty.
  std::function<void(std::string_view)> warn;
};

/// Manufactured forcing added to the right-hand side (verification only).
using Forcing = std::function<VectorField(double t)>;

struct SimConfig {
  double final_time = 1.0;
  double dt = 1e-3;
  SolverOptions solver;
  Forcing source;

  /// K = T / dt. Throws InputError unless dt > 0 and dt divides T to 1e-12 T.
  std::size_t steps() const;
};

/// m x lap m + m x u - (1 + |m|^2) m + u, with lap m precomputed.
VectorField reaction(const VectorField& m, const VectorField& lap_m, const VectorField& u);

/// One IMEX step: (I - dt lap_h) m+ = m + dt [reaction(m, u) + source].
/// Throws SolverError(implicit_solve) or SolverError(blow_up).
VectorField step(const VectorField& m, const VectorField& u, double dt,
                 const SolverOptions& opts = {}, const VectorField* source = nullptr);

/// K+1 frames; step j uses step_control(U, coils, j).
Trajectory simulate(const VectorField& m0, const ControlPath& U, const CoilSet& coils,
                    const SimConfig& cfg);

/// Initial data, coils and time stepping: everything G(U) needs besides U.
struct StateProblem {
  VectorField m0;
  CoilSet coils;
  SimConfig sim;

  Trajectory solve(const ControlPath& U) const { return simulate(m0, U, coils, sim); }
  /// Zero control path on this problem's time grid with constant bounds.
  ControlPath zero_control(double lower, double upper) const;
};

struct EnergyRecord {
  double t = 0.0;
  double l2_sq = 0.0;     // ||m||^2_{L2}
  double grad_sq = 0.0;   // ||grad m||^2_{L2}
  double l4_4 = 0.0;      // ||m||^4_{L4}
  double control_sq = 0.0;  // ||u||^2_{L2}
  /// ||m(t)||^2 + int_0^t (||grad m||^2 + ||m||^2 + ||m||_4^4) - ||m0||^2 - int_0^t ||u||^2
  double defect = 0.0;
};

/// Per-frame energy bookkeeping for the differential energy inequality; the
/// exact solution keeps defect <= 0.
std::vector<EnergyRecord> energy_ledger(const Trajectory& traj, const ControlPath& U,
                                        const CoilSet& coils);

}  // namespace llb
