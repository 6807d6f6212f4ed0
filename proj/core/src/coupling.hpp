#pragma once

// Linear coupling operators shared by the tangent, adjoint and costate solvers.
// With A z the explicit part of the linearized state operator and A^T its
// transpose under the cell-sum inner product, <phi, A z> = <A^T phi, z> holds
// exactly on the grid because lap_h is symmetric.

#include "llb/grid.hpp"

namespace llb::detail {

/// A z = z x lap m + m x lap z + z x u - (1 + |m|^2) z - 2 (m . z) m
inline VectorField tangent_coupling(const VectorField& z, const VectorField& lap_z,
                                    const VectorField& m, const VectorField& lap_m,
                                    const VectorField& u) {
  VectorField out(z.grid());
  for (std::size_t n = 0; n < z.size(); ++n) {
    const Vec3& zn = z[n];
    const Vec3& mn = m[n];
    out[n] = cross(zn, lap_m[n]) + cross(mn, lap_z[n]) + cross(zn, u[n]) -
             (1.0 + norm_sq(mn)) * zn - 2.0 * dot(mn, zn) * mn;
  }
  return out;
}

/// A^T phi = lap(phi x m) + lap m x phi - phi x u - (1 + |m|^2) phi - 2 (m . phi) m
inline VectorField adjoint_coupling(const VectorField& phi, const VectorField& m,
                                    const VectorField& lap_m, const VectorField& u) {
  VectorField out = laplacian(cross(phi, m));
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const Vec3& pn = phi[n];
    const Vec3& mn = m[n];
    out[n] += cross(lap_m[n], pn) - cross(pn, u[n]) - (1.0 + norm_sq(mn)) * pn -
              2.0 * dot(mn, pn) * mn;
  }
  return out;
}

/// zeta + m x zeta, the control's contribution to the linearized state equation.
inline VectorField control_forcing(const VectorField& m, const VectorField& zeta) {
  VectorField out(m.grid());
  for (std::size_t n = 0; n < m.size(); ++n) out[n] = zeta[n] + cross(m[n], zeta[n]);
  return out;
}

}  // namespace llb::detail
