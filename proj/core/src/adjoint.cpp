#include "llb/adjoint.hpp"

#include <string>

#include "coupling.hpp"
#include "llb/errors.hpp"

namespace llb {

Trajectory solve_adjoint(const AdjointProblem& p, const SolverOptions& opts,
                         AdjointScheme scheme) {
  const Trajectory& base = p.base;
  const std::size_t K = base.steps();
  const double dt = base.dt();
  if (p.control.nodes() != K + 1) throw InputError("adjoint: control and state time grids differ");
  if (!p.rhs.empty() && p.rhs.size() != K + 1)
    throw InputError("adjoint: right-hand side needs one frame per time node");
  require_same_grid(base.grid(), p.terminal.grid(), "adjoint terminal value");
  if (!p.terminal.all_finite()) throw InputError("adjoint: terminal value is not finite");
  for (const auto& g : p.rhs) require_same_grid(base.grid(), g.grid(), "adjoint right-hand side");

  std::vector<VectorField> frames(K + 1);
  frames[K] = p.terminal;
  for (std::size_t k = K; k-- > 0;) {
    const std::size_t j = k + 1;  // frame the backward step starts from
    const VectorField& phi = frames[j];
    VectorField rhs(base.grid());
    if (scheme == AdjointScheme::transpose && j == K) {
      if (!p.rhs.empty()) rhs.axpy(-0.5 * dt, p.rhs[j]);
    } else {
      const VectorField& m = base[j];
      const VectorField lap_m = laplacian(m);
      const VectorField u = step_control(p.control, p.coils, j);
      rhs = detail::adjoint_coupling(phi, m, lap_m, u);
      if (!p.rhs.empty()) rhs -= p.rhs[j];
      rhs *= dt;
    }
    rhs += phi;

    VectorField next = phi;
    try {
      solve_implicit_diffusion(dt, rhs, next, opts.cg);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), dt * j, std::string("adjoint: ") + e.what());
    }
    if (!next.all_finite())
      throw SolverError(SolverFailure::blow_up, dt * j, "adjoint: non-finite values");
    frames[k] = std::move(next);
  }
  return Trajectory(base.grid(), dt, std::move(frames));
}

std::vector<VectorField> costate_derivative_rhs(const LinearizationPoint& point,
                                                const Trajectory& z, const Trajectory& phi,
                                                const ControlPath& dU) {
  const Trajectory& base = point.state;
  const std::size_t F = base.frame_count();
  if (z.frame_count() != F || phi.frame_count() != F || dU.nodes() != F)
    throw InputError("costate derivative: time grids differ");

  std::vector<VectorField> g;
  g.reserve(F);
  for (std::size_t k = 0; k < F; ++k) {
    const VectorField& m = base[k];
    const VectorField& zk = z[k];
    const VectorField& pk = phi[k];
    const VectorField zeta = step_control(dU, point.coils, k);
    const VectorField lap_z = laplacian(zk);
    VectorField out = laplacian(cross(pk, zk));
    out *= -1.0;
    for (std::size_t n = 0; n < m.size(); ++n) {
      const Vec3& mn = m[n];
      const Vec3& zn = zk[n];
      const Vec3& pn = pk[n];
      out[n] += -cross(lap_z[n], pn) + cross(pn, zeta[n]) + 2.0 * dot(mn, zn) * pn +
                2.0 * dot(zn, pn) * mn + 2.0 * dot(mn, pn) * zn - zn;
    }
    g.push_back(std::move(out));
  }
  return g;
}

Trajectory solve_costate_derivative(const LinearizationPoint& point, const Trajectory& z,
                                    const Trajectory& phi, const ControlPath& dU,
                                    const SolverOptions& opts) {
  AdjointProblem p{point.state, point.control, point.coils,
                   costate_derivative_rhs(point, z, phi, dU), z.back()};
  return solve_adjoint(p, opts, AdjointScheme::continuous);
}

}  // namespace llb
