#include "llb/optimize.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "llb/errors.hpp"

namespace llb {

CostBreakdown evaluate_cost(const Trajectory& traj, const ControlPath& U,
                            const TrackingTargets& targets) {
  const std::size_t F = traj.frame_count();
  if (targets.desired.size() != F)
    throw InputError("target/grid incompatibility: desired trajectory has " +
                     std::to_string(targets.desired.size()) + " frames, state has " +
                     std::to_string(F));
  if (!(targets.terminal.grid() == traj.grid()))
    throw InputError("target/grid incompatibility: terminal target grid");
  if (U.nodes() != F) throw InputError("target/grid incompatibility: control time nodes");

  std::vector<double> sq(F);
  for (std::size_t k = 0; k < F; ++k) {
    if (!(targets.desired[k].grid() == traj.grid()))
      throw InputError("target/grid incompatibility: desired frame " + std::to_string(k));
    const VectorField r = traj[k] - targets.desired[k];
    sq[k] = inner(r, r);
  }
  CostBreakdown c;
  c.tracking = 0.5 * time_integral(sq, traj.dt());
  const VectorField rT = traj.back() - targets.terminal;
  c.terminal = 0.5 * inner(rT, rT);
  c.control = U.coils() == 0 ? 0.0 : 0.5 * control_inner(U.values(), U.values(), U.coils(), U.dt());
  c.total = c.tracking + c.terminal + c.control;
  return c;
}

CostBreakdown reduced_cost(const ControlProblem& problem, const ControlPath& U) {
  return evaluate_cost(problem.state.solve(U), U, problem.targets);
}

Trajectory tracking_adjoint(const ControlProblem& problem, const ControlPath& U,
                            const Trajectory& state, AdjointScheme scheme) {
  std::vector<VectorField> rhs;
  rhs.reserve(state.frame_count());
  for (std::size_t k = 0; k < state.frame_count(); ++k)
    rhs.push_back(problem.targets.desired[k] - state[k]);
  AdjointProblem p{state, U, problem.state.coils, std::move(rhs),
                   state.back() - problem.targets.terminal};
  return solve_adjoint(p, problem.state.sim.solver, scheme);
}

std::vector<double> coil_pairing(const Trajectory& state, const Trajectory& adjoint,
                                 const CoilSet& coils, GradientMode mode) {
  const std::size_t F = state.frame_count();
  const std::size_t N = coils.size();
  // Nodewise pairing int (phi x m + phi) . B_i.
  std::vector<double> nodal(F * N, 0.0);
  const std::size_t last = mode == GradientMode::consistent ? F - 1 : F;
  for (std::size_t k = 0; k < last; ++k) {
    VectorField w = cross(adjoint[k], state[k]);
    w += adjoint[k];
    for (std::size_t i = 0; i < N; ++i) nodal[k * N + i] = inner(w, coils.geometry(i));
  }
  if (mode == GradientMode::continuous || F < 2) return nodal;

  // Step k carries the intensity (U_k + U_{k+1}) / 2, so node j collects half of
  // steps j-1 and j; with trapezoid weights the end nodes take the full step.
  std::vector<double> out(F * N, 0.0);
  const std::size_t K = F - 1;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = nodal[i];
    out[K * N + i] = nodal[(K - 1) * N + i];
    for (std::size_t j = 1; j < K; ++j)
      out[j * N + i] = 0.5 * (nodal[(j - 1) * N + i] + nodal[j * N + i]);
  }
  return out;
}

GradientResult reduced_gradient(const ControlProblem& problem, const ControlPath& U,
                                GradientMode mode) {
  return reduced_gradient(problem, U, problem.state.solve(U), mode);
}

GradientResult reduced_gradient(const ControlProblem& problem, const ControlPath& U,
                                Trajectory state, GradientMode mode) {
  GradientResult r;
  r.cost = evaluate_cost(state, U, problem.targets);
  const AdjointScheme scheme =
      mode == GradientMode::consistent ? AdjointScheme::transpose : AdjointScheme::continuous;
  r.adjoint = tracking_adjoint(problem, U, state, scheme);
  r.pairing = coil_pairing(state, r.adjoint, problem.state.coils, mode);
  r.gradient = U.values();
  for (std::size_t n = 0; n < r.gradient.size(); ++n) r.gradient[n] += r.pairing[n];
  r.state = std::move(state);
  return r;
}

double directional_fd(const ControlProblem& problem, const ControlPath& U,
                      std::span<const double> direction, double eps) {
  if (direction.size() != U.values().size()) throw InputError("directional_fd: size mismatch");
  std::vector<double> plus = U.values(), minus = U.values();
  for (std::size_t n = 0; n < plus.size(); ++n) {
    plus[n] += eps * direction[n];
    minus[n] -= eps * direction[n];
  }
  const double jp = reduced_cost(problem, U.with_values(std::move(plus))).total;
  const double jm = reduced_cost(problem, U.with_values(std::move(minus))).total;
  return (jp - jm) / (2.0 * eps);
}

double natural_residual(const ControlPath& U, std::span<const double> gradient, double step) {
  if (U.coils() == 0) return 0.0;
  std::vector<double> trial(U.values().size());
  for (std::size_t n = 0; n < trial.size(); ++n) trial[n] = U.values()[n] - step * gradient[n];
  trial = project_box(trial, U.lower(), U.upper());
  for (std::size_t n = 0; n < trial.size(); ++n) trial[n] = U.values()[n] - trial[n];
  return std::sqrt(control_inner(trial, trial, U.coils(), U.dt()) / U.final_time());
}

DescentResult projected_gradient_descent(const ControlProblem& problem, const ControlPath& U0,
                                         const DescentOptions& opts,
                                         const DescentObserver& observer) {
  DescentResult res;
  ControlPath U = U0.feasible() ? U0 : U0.projected();
  GradientResult G = reduced_gradient(problem, U, opts.mode);
  double accepted_step = 0.0;

  for (std::size_t it = 0;; ++it) {
    DescentRecord rec{it, G.cost, natural_residual(U, G.gradient, opts.reference_step),
                      accepted_step};
    res.history.push_back(rec);
    if (observer) observer(rec);
    res.iterations = it;
    if (rec.residual <= opts.tol) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    double s = opts.initial_step;
    for (int halvings = 0;; ++halvings) {
      if (halvings > opts.max_halvings)
        throw SolverError(SolverFailure::stalled_descent, 0.0,
                          "stalled descent: no Armijo step after " +
                              std::to_string(opts.max_halvings) + " halvings at iteration " +
                              std::to_string(it));
      std::vector<double> trial(U.values().size());
      for (std::size_t n = 0; n < trial.size(); ++n) trial[n] = U.values()[n] - s * G.gradient[n];
      ControlPath Ut = U.with_values(project_box(trial, U.lower(), U.upper()));

      std::vector<double> delta(trial.size());
      for (std::size_t n = 0; n < delta.size(); ++n) delta[n] = Ut.values()[n] - U.values()[n];
      const double slope = control_inner(G.gradient, delta, U.coils(), U.dt());

      Trajectory state;
      try {
        state = problem.state.solve(Ut);
      } catch (const SolverError& e) {
        if (e.kind() != SolverFailure::blow_up) throw;
        s *= 0.5;
        continue;
      }
      const CostBreakdown c = evaluate_cost(state, Ut, problem.targets);
      if (c.total < G.cost.total && c.total <= G.cost.total + opts.armijo_c1 * slope) {
        U = std::move(Ut);
        G = reduced_gradient(problem, U, std::move(state), opts.mode);
        accepted_step = s;
        break;
      }
      s *= 0.5;
    }
  }
  res.control = std::move(U);
  return res;
}

double costate_norm(const Trajectory& phi) {
  const double a = max_frame_norm(phi, Norm::L2);
  const double b = time_l2_norm(phi, Norm::H1);
  return std::sqrt(a * a + b * b);
}

LipschitzEstimate estimate_costate_lipschitz(
    const ControlProblem& problem, std::span<const std::pair<ControlPath, ControlPath>> pairs,
    GradientMode mode) {
  const AdjointScheme scheme =
      mode == GradientMode::consistent ? AdjointScheme::transpose : AdjointScheme::continuous;
  LipschitzEstimate est;
  for (const auto& [u1, u2] : pairs) {
    std::vector<double> diff(u1.values().size());
    for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = u1.values()[n] - u2.values()[n];
    const double du = std::sqrt(control_inner(diff, diff, u1.coils(), u1.dt()));
    if (du == 0.0) continue;
    const Trajectory m1 = problem.state.solve(u1);
    const Trajectory m2 = problem.state.solve(u2);
    const Trajectory p1 = tracking_adjoint(problem, u1, m1, scheme);
    const Trajectory p2 = tracking_adjoint(problem, u2, m2, scheme);
    est.ratio = std::max(est.ratio, costate_norm(difference(p1, p2)) / du);
    ++est.informative_pairs;
  }
  return est;
}

}  // namespace llb
