#pragma once

// Cosine-Galerkin reference solver.
//
// The state is expanded in the lowest eigenvectors xi_k of (-lap_h + I),
// m = sum_k a_k xi_k with a_k in R^3, and the coefficients follow
//   a_k' = (1 - rho_k) a_k + <xi_k, N(m, zeta)>,
//   N(m, u) = m x lap_h m + m x u - (1 + |m|^2) m + u,
// integrated with classical RK4. The control is piecewise linear in time
// between the nodes of the control path.

#include <cstddef>
#include <vector>

#include "llb/coils.hpp"
#include "llb/grid.hpp"

namespace llb {

struct GalerkinOptions {
  std::size_t modes = 8;
  /// RK4 substeps per control-path interval.
  std::size_t substeps = 10;
};

class GalerkinBasis {
 public:
  GalerkinBasis(const Grid& grid, std::size_t modes);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return modes_.size(); }
  const CosineMode& mode(std::size_t k) const { return modes_[k]; }

  /// Coefficients <f, xi_k> of the orthogonal projection.
  std::vector<Vec3> project(const VectorField& f) const;
  VectorField reconstruct(const std::vector<Vec3>& coeffs) const;

 private:
  Grid grid_;
  std::vector<CosineMode> modes_;
};

/// Galerkin trajectory sampled at the nodes of U (frames on the grid of m0,
/// reconstructed from the coefficients). m0 is projected onto the basis first.
Trajectory galerkin_simulate(const VectorField& m0, const ControlPath& U, const CoilSet& coils,
                             const GalerkinOptions& opts = {});

}  // namespace llb
