#include "llb/state.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "llb/errors.hpp"

namespace llb {

std::size_t SimConfig::steps() const {
  if (!(dt > 0.0)) throw InputError("time.dt must be positive");
  if (!(final_time > 0.0)) throw InputError("time.T must be positive");
  const double ratio = final_time / dt;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(k * dt - final_time) > 1e-12 * final_time)
    throw InputError("time.dt does not divide time.T");
  return static_cast<std::size_t>(k);
}

VectorField reaction(const VectorField& m, const VectorField& lap_m, const VectorField& u) {
  VectorField out(m.grid());
  for (std::size_t n = 0; n < m.size(); ++n) {
    const Vec3& a = m[n];
    out[n] = cross(a, lap_m[n]) + cross(a, u[n]) - (1.0 + norm_sq(a)) * a + u[n];
  }
  return out;
}

namespace {

double linf(const VectorField& f) {
  double m = 0.0;
  for (const Vec3& v : f.values()) m = std::max(m, norm_sq(v));
  return std::sqrt(m);
}

}  // namespace

VectorField step(const VectorField& m, const VectorField& u, double dt, const SolverOptions& opts,
                 const VectorField* source) {
  require_same_grid(m.grid(), u.grid(), "step");
  if (!(dt > 0.0)) throw InputError("step needs dt > 0");

  if (opts.warn) {
    const double mi = linf(m);
    const double stiffness = dt * (1.0 + mi * mi);
    if (stiffness > opts.stability_warning) {
      std::ostringstream os;
      os << "explicit reaction stiffness dt(1+|m|_inf^2) = " << stiffness << " exceeds "
         << opts.stability_warning;
      opts.warn(os.str());
    }
  }

  const VectorField lap = laplacian(m);
  VectorField rhs = reaction(m, lap, u);
  if (source) rhs += *source;
  rhs *= dt;
  rhs += m;

  VectorField next = m;
  solve_implicit_diffusion(dt, rhs, next, opts.cg);
  if (!next.all_finite() || linf(next) > opts.blowup_threshold)
    throw SolverError(SolverFailure::blow_up, 0.0, "state blow-up");
  return next;
}

Trajectory simulate(const VectorField& m0, const ControlPath& U, const CoilSet& coils,
                    const SimConfig& cfg) {
  const std::size_t K = cfg.steps();
  require_same_grid(m0.grid(), coils.grid(), "simulate");
  if (U.nodes() != K + 1) throw InputError("control path has the wrong number of time nodes");
  if (U.coils() != coils.size()) throw InputError("control path and coil set disagree on N");
  if (!m0.all_finite()) throw InputError("initial state is not finite");

  std::vector<VectorField> frames;
  frames.reserve(K + 1);
  frames.push_back(m0);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = cfg.dt * static_cast<double>(k);
    const VectorField u = step_control(U, coils, k);
    try {
      if (cfg.source) {
        const VectorField s = cfg.source(t);
        frames.push_back(step(frames.back(), u, cfg.dt, cfg.solver, &s));
      } else {
        frames.push_back(step(frames.back(), u, cfg.dt, cfg.solver));
      }
    } catch (const SolverError& e) {
      std::ostringstream os;
      os << e.what() << " in step " << k << " -> " << k + 1 << " (t = " << t + cfg.dt
         << "); last finite state at t = " << t;
      throw SolverError(e.kind(), t, os.str());
    }
  }
  return Trajectory(m0.grid(), cfg.dt, std::move(frames));
}

ControlPath StateProblem::zero_control(double lower, double upper) const {
  return ControlPath(sim.steps() + 1, coils.size(), sim.dt, lower, upper);
}

std::vector<EnergyRecord> energy_ledger(const Trajectory& traj, const ControlPath& U,
                                        const CoilSet& coils) {
  const std::size_t F = traj.frame_count();
  std::vector<EnergyRecord> out(F);
  const bool with_control = coils.size() > 0 && U.nodes() == F;
  for (std::size_t k = 0; k < F; ++k) {
    const VectorField& m = traj[k];
    auto& r = out[k];
    r.t = traj.time(k);
    r.l2_sq = inner(m, m);
    r.grad_sq = gradient_norm_sq(m);
    const double l4 = norm(m, Norm::L4);
    r.l4_4 = l4 * l4 * l4 * l4;
    if (with_control) {
      const VectorField u = synthesize(U, coils, k);
      r.control_sq = inner(u, u);
    }
  }
  // Cumulative trapezoid integrals.
  double dissipated = 0.0, supplied = 0.0;
  const double dt = traj.dt();
  for (std::size_t k = 0; k < F; ++k) {
    if (k > 0) {
      const auto& a = out[k - 1];
      const auto& b = out[k];
      dissipated += 0.5 * dt * ((a.grad_sq + a.l2_sq + a.l4_4) + (b.grad_sq + b.l2_sq + b.l4_4));
      supplied += 0.5 * dt * (a.control_sq + b.control_sq);
    }
    out[k].defect = out[k].l2_sq + dissipated - out[0].l2_sq - supplied;
  }
  return out;
}

}  // namespace llb
