#include "llb/coils.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "llb/errors.hpp"

namespace llb {

CoilSet::CoilSet(const Grid& grid, std::vector<VectorField> geometries) : grid_(grid) {
  for (auto& g : geometries) add(std::move(g));
}

void CoilSet::add(VectorField geometry) {
  if (!(geometry.grid() == grid_))
    throw InputError("coil/grid incompatibility for coil " + std::to_string(size()));
  if (!geometry.all_finite())
    throw InputError("coil " + std::to_string(size()) + " has non-finite values");
  h1_norms_.push_back(norm(geometry, Norm::H1));
  geometries_.push_back(std::move(geometry));
}

double CoilSet::max_h1_norm() const noexcept {
  double m = 0.0;
  for (double v : h1_norms_) m = std::max(m, v);
  return m;
}

VectorField gaussian_coil(const Grid& grid, std::array<double, 3> center, double width,
                          int axis) {
  if (!(width > 0.0)) throw InputError("gaussian coil needs width > 0");
  if (axis < 0 || axis > 2) throw InputError("gaussian coil axis must be 0, 1 or 2");
  VectorField f(grid);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const auto x = grid.center(n);
    double r2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    const double v = std::exp(-r2 / (2.0 * width * width));
    Vec3 e;
    (axis == 0 ? e.x : axis == 1 ? e.y : e.z) = v;
    f[n] = e;
  }
  return f;
}

VectorField uniform_coil(const Grid& grid, Vec3 direction) { return VectorField(grid, direction); }

// ---------------------------------------------------------------------------

ControlPath::ControlPath(std::size_t nodes, std::size_t coils, double dt)
    : ControlPath(nodes, coils, dt, -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()) {}

ControlPath::ControlPath(std::size_t nodes, std::size_t coils, double dt, double lower,
                         double upper)
    : nodes_(nodes),
      coils_(coils),
      dt_(dt),
      values_(nodes * coils, 0.0),
      lower_(nodes * coils, lower),
      upper_(nodes * coils, upper) {
  if (!(dt > 0.0)) throw InputError("control path needs dt > 0");
  if (lower > upper) throw InputError("empty box: lower bound exceeds upper bound");
}

ControlPath ControlPath::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) throw InputError("control values have the wrong size");
  ControlPath out = *this;
  out.values_ = std::move(values);
  return out;
}

bool ControlPath::feasible() const noexcept {
  for (std::size_t n = 0; n < values_.size(); ++n)
    if (values_[n] < lower_[n] || values_[n] > upper_[n]) return false;
  return true;
}

ControlPath ControlPath::projected() const { return with_values(project_box(values_, lower_, upper_)); }

std::vector<double> ControlPath::series(std::size_t i) const {
  std::vector<double> s(nodes_);
  for (std::size_t j = 0; j < nodes_; ++j) s[j] = (*this)(j, i);
  return s;
}

// ---------------------------------------------------------------------------

VectorField synthesize(std::span<const double> intensities, const CoilSet& coils) {
  if (intensities.size() != coils.size())
    throw InputError("coil/grid incompatibility: " + std::to_string(intensities.size()) +
                     " intensities for " + std::to_string(coils.size()) + " coils");
  VectorField u(coils.grid());
  for (std::size_t k = 0; k < coils.size(); ++k) {
    const double w = intensities[k];
    if (w == 0.0) continue;
    u.axpy(w, coils.geometry(k));
  }
  return u;
}

VectorField synthesize(const ControlPath& U, const CoilSet& coils, std::size_t frame) {
  if (frame >= U.nodes()) throw InputError("frame index beyond the control path");
  return synthesize(U.row(frame), coils);
}

VectorField step_control(const ControlPath& U, const CoilSet& coils, std::size_t step) {
  if (step + 1 >= U.nodes()) return synthesize(U, coils, step);
  std::vector<double> mid(U.coils());
  for (std::size_t i = 0; i < U.coils(); ++i) mid[i] = 0.5 * (U(step, i) + U(step + 1, i));
  return synthesize(mid, coils);
}

double control_inner(std::span<const double> a, std::span<const double> b, std::size_t coils,
                     double dt) {
  if (a.size() != b.size()) throw InputError("control inner product: size mismatch");
  if (coils == 0) return 0.0;
  const std::size_t nodes = a.size() / coils;
  if (nodes < 2) throw InputError("degenerate time grid: need at least 2 samples");
  double s = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double w = (j == 0 || j + 1 == nodes) ? 0.5 : 1.0;
    double row = 0.0;
    for (std::size_t i = 0; i < coils; ++i) row += a[j * coils + i] * b[j * coils + i];
    s += w * row;
  }
  return s * dt;
}

double norm_rms(const ControlPath& U) {
  return std::sqrt(control_inner(U.values(), U.values(), U.coils(), U.dt()));
}

double norm_sum(const ControlPath& U) {
  double s = 0.0;
  for (std::size_t i = 0; i < U.coils(); ++i) {
    auto sq = U.series(i);
    for (double& v : sq) v *= v;
    s += std::sqrt(time_integral(sq, U.dt()));
  }
  return s;
}

double zeta_bound(const ControlPath& U, const CoilSet& coils) {
  return coils.max_h1_norm() * norm_sum(U);
}

double zeta_norm(const ControlPath& U, const CoilSet& coils) {
  std::vector<double> sq(U.nodes());
  for (std::size_t j = 0; j < U.nodes(); ++j) {
    const double v = norm(synthesize(U, coils, j), Norm::H1);
    sq[j] = v * v;
  }
  return std::sqrt(time_integral(sq, U.dt()));
}

std::vector<double> project_box(std::span<const double> values, std::span<const double> lower,
                                std::span<const double> upper) {
  if (values.size() != lower.size() || values.size() != upper.size())
    throw InputError("project_box: size mismatch");
  std::vector<double> out(values.size());
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (lower[n] > upper[n]) throw InputError("empty box at entry " + std::to_string(n));
    out[n] = std::min(upper[n], std::max(lower[n], values[n]));
  }
  return out;
}

}  // namespace llb
