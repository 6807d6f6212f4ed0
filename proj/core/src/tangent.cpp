#include "llb/tangent.hpp"

#include <cmath>
#include <limits>

#include "coupling.hpp"
#include "llb/errors.hpp"

namespace llb {

Trajectory solve_tangent(const LinearizationPoint& point, const ControlPath& dU,
                         const SolverOptions& opts) {
  const Trajectory& base = point.state;
  const std::size_t K = base.steps();
  if (point.control.nodes() != K + 1 || dU.nodes() != K + 1)
    throw InputError("tangent: control and trajectory time grids differ");
  if (dU.coils() != point.coils.size()) throw InputError("tangent: direction has wrong N");
  const double dt = base.dt();

  std::vector<VectorField> frames;
  frames.reserve(K + 1);
  frames.emplace_back(base.grid());
  for (std::size_t k = 0; k < K; ++k) {
    const VectorField& z = frames.back();
    const VectorField& m = base[k];
    const VectorField lap_m = laplacian(m);
    const VectorField lap_z = laplacian(z);
    const VectorField u = step_control(point.control, point.coils, k);
    const VectorField zeta = step_control(dU, point.coils, k);

    VectorField rhs = detail::tangent_coupling(z, lap_z, m, lap_m, u);
    rhs += detail::control_forcing(m, zeta);
    rhs *= dt;
    rhs += z;

    VectorField next = z;
    try {
      solve_implicit_diffusion(dt, rhs, next, opts.cg);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), dt * k, std::string("tangent: ") + e.what());
    }
    if (!next.all_finite())
      throw SolverError(SolverFailure::blow_up, dt * k, "tangent: non-finite values");
    frames.push_back(std::move(next));
  }
  return Trajectory(base.grid(), dt, std::move(frames));
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TaylorStudy taylor_remainder_order(const StateProblem& problem, const ControlPath& base,
                                   const ControlPath& dU, std::span<const double> eps) {
  const Trajectory m = problem.solve(base);
  const Trajectory z = solve_tangent({m, base, problem.coils}, dU, problem.sim.solver);

  TaylorStudy out;
  for (double e : eps) {
    std::vector<double> shifted = base.values();
    for (std::size_t n = 0; n < shifted.size(); ++n) shifted[n] += e * dU.values()[n];
    const Trajectory me = problem.solve(base.with_values(std::move(shifted)));
    double rem = 0.0, first = 0.0;
    for (std::size_t k = 0; k < m.frame_count(); ++k) {
      VectorField d = me[k] - m[k];
      first = std::max(first, norm(d, Norm::H1));
      d.axpy(-e, z[k]);
      rem = std::max(rem, norm(d, Norm::H1));
    }
    out.eps.push_back(e);
    out.remainder.push_back(rem);
    out.first_difference.push_back(first);
  }
  out.remainder_slope = loglog_slope(out.eps, out.remainder);
  out.first_difference_slope = loglog_slope(out.eps, out.first_difference);
  return out;
}

LipschitzEstimate estimate_state_lipschitz(
    const StateProblem& problem, std::span<const std::pair<ControlPath, ControlPath>> pairs) {
  LipschitzEstimate est;
  for (const auto& [u1, u2] : pairs) {
    std::vector<double> diff(u1.values().size());
    for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = u1.values()[n] - u2.values()[n];
    const double du = std::sqrt(control_inner(diff, diff, u1.coils(), u1.dt()));
    if (du == 0.0) continue;
    const Trajectory d = difference(problem.solve(u1), problem.solve(u2));
    est.ratio = std::max(est.ratio, max_frame_norm(d, Norm::H1) / du);
    ++est.informative_pairs;
  }
  return est;
}

}  // namespace llb
