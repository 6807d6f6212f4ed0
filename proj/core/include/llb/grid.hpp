#pragma once

// Cell-centered rectangular grids with homogeneous-Neumann discrete calculus.
//
// Nodes sit at cell centers x_i = (i + 1/2) h. The boundary condition dm/dn = 0
// is imposed by mirror ghost cells (ghost value = adjacent interior value), which
// makes the discrete Laplacian symmetric under the cell-sum inner product and
// annihilates constants exactly.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "llb/vec3.hpp"

namespace llb {

class Grid {
 public:
  Grid() = default;
  /// Throws InputError unless 1 <= dim <= 3 and every used axis has cells > 0, length > 0.
  Grid(int dim, std::array<int, 3> cells, std::array<double, 3> lengths);

  static Grid line(int cells, double length = 1.0);
  static Grid square(int cells, double length = 1.0);
  static Grid cube(int cells, double length = 1.0);

  int dim() const noexcept { return dim_; }
  int cells(int axis) const noexcept { return cells_[axis]; }
  double length(int axis) const noexcept { return lengths_[axis]; }
  double spacing(int axis) const noexcept { return lengths_[axis] / cells_[axis]; }
  std::size_t node_count() const noexcept { return node_count_; }
  double cell_volume() const noexcept;
  /// |Omega|.
  double measure() const noexcept;

  std::size_t index(int i, int j = 0, int k = 0) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(cells_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(cells_[1]) * k);
  }
  std::array<int, 3> multi_index(std::size_t node) const noexcept;
  /// Physical coordinate of a node (unused axes report 0).
  std::array<double, 3> center(std::size_t node) const noexcept;

  bool operator==(const Grid& o) const noexcept {
    return dim_ == o.dim_ && cells_ == o.cells_ && lengths_ == o.lengths_;
  }

 private:
  int dim_ = 1;
  std::array<int, 3> cells_{1, 1, 1};
  std::array<double, 3> lengths_{1.0, 1.0, 1.0};
  std::size_t node_count_ = 1;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& grid, Vec3 fill = {});
  VectorField(const Grid& grid, std::vector<Vec3> values);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  Vec3& operator[](std::size_t n) noexcept { return values_[n]; }
  const Vec3& operator[](std::size_t n) const noexcept { return values_[n]; }
  std::span<Vec3> values() noexcept { return values_; }
  std::span<const Vec3> values() const noexcept { return values_; }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s) noexcept;
  /// this += s * o
  VectorField& axpy(double s, const VectorField& o);

  bool all_finite() const noexcept;
  void set_zero() noexcept;

 private:
  Grid grid_;
  std::vector<Vec3> values_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

/// Nodewise cross product a x b.
VectorField cross(const VectorField& a, const VectorField& b);

/// Throws InputError naming `what` when the grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Time-indexed frames t_k = k * dt, k = 0..K.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(const Grid& grid, double dt, std::vector<VectorField> frames);

  const Grid& grid() const noexcept { return grid_; }
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return frames_.empty() ? 0 : frames_.size() - 1; }
  std::size_t frame_count() const noexcept { return frames_.size(); }
  double final_time() const noexcept { return dt_ * static_cast<double>(steps()); }
  double time(std::size_t k) const noexcept { return dt_ * static_cast<double>(k); }

  const VectorField& operator[](std::size_t k) const noexcept { return frames_[k]; }
  VectorField& operator[](std::size_t k) noexcept { return frames_[k]; }
  const VectorField& back() const { return frames_.back(); }
  const std::vector<VectorField>& frames() const noexcept { return frames_; }

 private:
  Grid grid_;
  double dt_ = 0.0;
  std::vector<VectorField> frames_;
};

// ---------------------------------------------------------------------------
// Discrete calculus

/// Second-order mirror-ghost Laplacian, applied per component.
VectorField laplacian(const VectorField& f);
void laplacian_into(const VectorField& f, VectorField& out);

/// Cell-sum inner product: vol * sum_n f_n . g_n.
double inner(const VectorField& f, const VectorField& g);

/// ||grad_h f||^2 over interior faces; equals -<lap_h f, f> exactly.
double gradient_norm_sq(const VectorField& f);

enum class Norm { L2, L4, L6, Linf, H1, H2equiv };

double norm(const VectorField& f, Norm which);

/// Trapezoidal rule on a uniform time grid. Throws InputError on fewer than 2 samples.
double time_integral(std::span<const double> series, double dt);

/// max_k ||traj[k]||_which
double max_frame_norm(const Trajectory& traj, Norm which);
/// (int_0^T ||traj(t)||_which^2 dt)^{1/2}
double time_l2_norm(const Trajectory& traj, Norm which);

/// Difference of two trajectories on the same grid and time nodes.
Trajectory difference(const Trajectory& a, const Trajectory& b);

// ---------------------------------------------------------------------------
// Cosine eigenbasis of (-lap_h + I)

struct CosineMode {
  std::array<int, 3> wavenumber{};  // k_i in cos(k_i pi x_i / L_i)
  double eigenvalue = 1.0;          // rho of (-lap_h + I) xi = rho xi
  std::vector<double> values;       // unit cell-sum L2 norm
};

/// The `count` lowest modes of the discrete operator, ordered by eigenvalue
/// (ties broken lexicographically on the wavenumber). Throws InputError
/// ("over-resolved basis") when count exceeds the node count.
std::vector<CosineMode> cosine_modes(const Grid& grid, std::size_t count);

}  // namespace llb
