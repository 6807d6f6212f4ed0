#pragma once

// Coil-parameterized controls u(x,t) = sum_k U_k(t) B_k(x) and their box set.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "llb/grid.hpp"

namespace llb {

class CoilSet {
 public:
  CoilSet() = default;
  explicit CoilSet(const Grid& grid) : grid_(grid) {}
  CoilSet(const Grid& grid, std::vector<VectorField> geometries);

  /// Throws InputError ("coil/grid incompatibility") for a field on another grid.
  void add(VectorField geometry);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return geometries_.size(); }
  const VectorField& geometry(std::size_t k) const { return geometries_[k]; }
  double h1_norm(std::size_t k) const { return h1_norms_[k]; }
  double max_h1_norm() const noexcept;

 private:
  Grid grid_;
  std::vector<VectorField> geometries_;
  std::vector<double> h1_norms_;
};

/// exp(-|x - c|^2 / (2 width^2)) e_axis
VectorField gaussian_coil(const Grid& grid, std::array<double, 3> center, double width, int axis);
/// Spatially constant coil.
VectorField uniform_coil(const Grid& grid, Vec3 direction);

/// Intensities U_i(t_j) with box bounds a_i(t_j) <= U_i(t_j) <= b_i(t_j),
/// stored row-major as (K+1) x N.
class ControlPath {
 public:
  ControlPath() = default;
  /// Zero intensities, bounds [-inf, inf].
  ControlPath(std::size_t nodes, std::size_t coils, double dt);
  /// Constant bounds; throws InputError ("empty box") when lower > upper.
  ControlPath(std::size_t nodes, std::size_t coils, double dt, double lower, double upper);

  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t coils() const noexcept { return coils_; }
  std::size_t steps() const noexcept { return nodes_ == 0 ? 0 : nodes_ - 1; }
  double dt() const noexcept { return dt_; }
  double final_time() const noexcept { return dt_ * static_cast<double>(steps()); }

  double& operator()(std::size_t j, std::size_t i) noexcept { return values_[j * coils_ + i]; }
  double operator()(std::size_t j, std::size_t i) const noexcept { return values_[j * coils_ + i]; }
  std::span<const double> row(std::size_t j) const noexcept {
    return std::span<const double>(values_).subspan(j * coils_, coils_);
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& lower() noexcept { return lower_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  std::vector<double>& upper() noexcept { return upper_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  /// Same time grid and bounds, new intensities.
  ControlPath with_values(std::vector<double> values) const;
  bool feasible() const noexcept;
  /// Copy with intensities clamped into the box.
  ControlPath projected() const;

  /// Per-coil time series U_i(t_0..t_K).
  std::vector<double> series(std::size_t i) const;

 private:
  std::size_t nodes_ = 0;
  std::size_t coils_ = 0;
  double dt_ = 0.0;
  std::vector<double> values_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// sum_k w_k B_k for one set of intensities.
VectorField synthesize(std::span<const double> intensities, const CoilSet& coils);
/// zeta(U) at frame j. Throws InputError on grid or coil-count mismatch.
VectorField synthesize(const ControlPath& U, const CoilSet& coils, std::size_t frame);

/// Field applied during IMEX step j -> j+1: zeta at the step midpoint,
/// (U_j + U_{j+1}) / 2. For j = K this is zeta(U_K).
VectorField step_control(const ControlPath& U, const CoilSet& coils, std::size_t step);

/// Trapezoid inner product sum_i int_0^T a_i b_i dt over (K+1) x N arrays.
double control_inner(std::span<const double> a, std::span<const double> b, std::size_t coils,
                     double dt);

/// (sum_i ||U_i||^2_{L2(0,T)})^{1/2}; the geometry of the cost's control term.
double norm_rms(const ControlPath& U);
/// sum_i ||U_i||_{L2(0,T)}; the norm used for the radius of U_R.
double norm_sum(const ControlPath& U);

/// max_k ||B_k||_{H1} * norm_sum(U), the bound on ||zeta(U)||_{L2(0,T;H1)}.
double zeta_bound(const ControlPath& U, const CoilSet& coils);
/// ||zeta(U)||_{L2(0,T;H1)} computed directly.
double zeta_norm(const ControlPath& U, const CoilSet& coils);

/// Elementwise min(upper, max(lower, x)). Throws InputError ("empty box")
/// when lower > upper anywhere or the sizes differ.
std::vector<double> project_box(std::span<const double> values, std::span<const double> lower,
                                std::span<const double> upper);

}  // namespace llb
