#include "llb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "llb/errors.hpp"

namespace llb {

Grid::Grid(int dim, std::array<int, 3> cells, std::array<double, 3> lengths)
    : dim_(dim), cells_(cells), lengths_(lengths) {
  if (dim < 1 || dim > 3) throw InputError("grid dimension must be 1, 2 or 3");
  node_count_ = 1;
  for (int a = 0; a < 3; ++a) {
    if (a >= dim) {
      cells_[a] = 1;
      lengths_[a] = 1.0;
      continue;
    }
    if (cells_[a] <= 0) throw InputError("grid axis " + std::to_string(a) + " needs cells > 0");
    if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a]))
      throw InputError("grid axis " + std::to_string(a) + " needs a positive length");
    node_count_ *= static_cast<std::size_t>(cells_[a]);
  }
}

Grid Grid::line(int cells, double length) { return Grid(1, {cells, 1, 1}, {length, 1.0, 1.0}); }
Grid Grid::square(int cells, double length) {
  return Grid(2, {cells, cells, 1}, {length, length, 1.0});
}
Grid Grid::cube(int cells, double length) {
  return Grid(3, {cells, cells, cells}, {length, length, length});
}

double Grid::cell_volume() const noexcept {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing(a);
  return v;
}

double Grid::measure() const noexcept {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= lengths_[a];
  return v;
}

std::array<int, 3> Grid::multi_index(std::size_t node) const noexcept {
  const auto nx = static_cast<std::size_t>(cells_[0]);
  const auto ny = static_cast<std::size_t>(cells_[1]);
  return {static_cast<int>(node % nx), static_cast<int>((node / nx) % ny),
          static_cast<int>(node / (nx * ny))};
}

std::array<double, 3> Grid::center(std::size_t node) const noexcept {
  const auto ijk = multi_index(node);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[a] = (ijk[a] + 0.5) * spacing(a);
  return x;
}

// ---------------------------------------------------------------------------

VectorField::VectorField(const Grid& grid, Vec3 fill)
    : grid_(grid), values_(grid.node_count(), fill) {}

VectorField::VectorField(const Grid& grid, std::vector<Vec3> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.node_count())
    throw InputError("field has " + std::to_string(values_.size()) + " values, grid has " +
                     std::to_string(grid_.node_count()) + " nodes");
}

VectorField& VectorField::operator+=(const VectorField& o) {
  require_same_grid(grid_, o.grid_, "field addition");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  require_same_grid(grid_, o.grid_, "field subtraction");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
  return *this;
}

VectorField& VectorField::operator*=(double s) noexcept {
  for (auto& v : values_) v *= s;
  return *this;
}

VectorField& VectorField::axpy(double s, const VectorField& o) {
  require_same_grid(grid_, o.grid_, "field axpy");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += s * o.values_[n];
  return *this;
}

bool VectorField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](const Vec3& v) { return is_finite(v); });
}

void VectorField::set_zero() noexcept { std::fill(values_.begin(), values_.end(), Vec3{}); }

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

VectorField cross(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid(), b.grid(), "cross product");
  VectorField out(a.grid());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = cross(a[n], b[n]);
  return out;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw InputError(std::string(what) + ": grid mismatch");
}

Trajectory::Trajectory(const Grid& grid, double dt, std::vector<VectorField> frames)
    : grid_(grid), dt_(dt), frames_(std::move(frames)) {
  if (!(dt_ > 0.0)) throw InputError("trajectory needs dt > 0");
  for (const auto& f : frames_) require_same_grid(grid_, f.grid(), "trajectory frame");
}

// ---------------------------------------------------------------------------

void laplacian_into(const VectorField& f, VectorField& out) {
  const Grid& g = f.grid();
  if (!(out.grid() == g)) out = VectorField(g);
  const int nx = g.cells(0), ny = g.cells(1), nz = g.cells(2);
  const double ix2 = 1.0 / (g.spacing(0) * g.spacing(0));
  const double iy2 = g.dim() > 1 ? 1.0 / (g.spacing(1) * g.spacing(1)) : 0.0;
  const double iz2 = g.dim() > 2 ? 1.0 / (g.spacing(2) * g.spacing(2)) : 0.0;
  const std::size_t sy = static_cast<std::size_t>(nx);
  const std::size_t sz = sy * static_cast<std::size_t>(ny);

  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t n = g.index(i, j, k);
        const Vec3& c = f[n];
        // Mirror ghosts: the missing neighbour equals the node itself.
        const Vec3& xm = i > 0 ? f[n - 1] : c;
        const Vec3& xp = i + 1 < nx ? f[n + 1] : c;
        Vec3 acc = ix2 * (xm + xp - 2.0 * c);
        if (g.dim() > 1) {
          const Vec3& ym = j > 0 ? f[n - sy] : c;
          const Vec3& yp = j + 1 < ny ? f[n + sy] : c;
          acc += iy2 * (ym + yp - 2.0 * c);
        }
        if (g.dim() > 2) {
          const Vec3& zm = k > 0 ? f[n - sz] : c;
          const Vec3& zp = k + 1 < nz ? f[n + sz] : c;
          acc += iz2 * (zm + zp - 2.0 * c);
        }
        out[n] = acc;
      }
    }
  }
}

VectorField laplacian(const VectorField& f) {
  VectorField out(f.grid());
  laplacian_into(f, out);
  return out;
}

double inner(const VectorField& f, const VectorField& g) {
  require_same_grid(f.grid(), g.grid(), "inner product");
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += dot(f[n], g[n]);
  return s * f.grid().cell_volume();
}

double gradient_norm_sq(const VectorField& f) {
  const Grid& g = f.grid();
  const int nx = g.cells(0), ny = g.cells(1), nz = g.cells(2);
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(nx),
                                          static_cast<std::size_t>(nx) * ny};
  double total = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double ih2 = 1.0 / (g.spacing(a) * g.spacing(a));
    double s = 0.0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const std::array<int, 3> ijk{i, j, k};
          if (ijk[a] + 1 >= g.cells(a)) continue;
          const std::size_t n = g.index(i, j, k);
          s += norm_sq(f[n + stride[a]] - f[n]);
        }
    total += s * ih2;
  }
  return total * g.cell_volume();
}

namespace {

double lp_norm(const VectorField& f, double p) {
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += std::pow(norm(f[n]), p);
  return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

}  // namespace

double norm(const VectorField& f, Norm which) {
  switch (which) {
    case Norm::L2:
      return std::sqrt(inner(f, f));
    case Norm::L4:
      return lp_norm(f, 4.0);
    case Norm::L6:
      return lp_norm(f, 6.0);
    case Norm::Linf: {
      double m = 0.0;
      for (std::size_t n = 0; n < f.size(); ++n) m = std::max(m, norm(f[n]));
      return m;
    }
    case Norm::H1:
      return std::sqrt(inner(f, f) + gradient_norm_sq(f));
    case Norm::H2equiv: {
      const VectorField lap = laplacian(f);
      return std::sqrt(inner(f, f)) + std::sqrt(inner(lap, lap));
    }
  }
  return 0.0;
}

double time_integral(std::span<const double> series, double dt) {
  if (series.size() < 2) throw InputError("degenerate time grid: need at least 2 samples");
  double s = 0.5 * (series.front() + series.back());
  for (std::size_t k = 1; k + 1 < series.size(); ++k) s += series[k];
  return s * dt;
}

double max_frame_norm(const Trajectory& traj, Norm which) {
  double m = 0.0;
  for (const auto& f : traj.frames()) m = std::max(m, norm(f, which));
  return m;
}

double time_l2_norm(const Trajectory& traj, Norm which) {
  std::vector<double> sq;
  sq.reserve(traj.frame_count());
  for (const auto& f : traj.frames()) {
    const double v = norm(f, which);
    sq.push_back(v * v);
  }
  return std::sqrt(time_integral(sq, traj.dt()));
}

Trajectory difference(const Trajectory& a, const Trajectory& b) {
  if (a.frame_count() != b.frame_count() || std::abs(a.dt() - b.dt()) > 1e-14 * a.dt())
    throw InputError("trajectory difference: time grids differ");
  std::vector<VectorField> frames;
  frames.reserve(a.frame_count());
  for (std::size_t k = 0; k < a.frame_count(); ++k) frames.push_back(a[k] - b[k]);
  return Trajectory(a.grid(), a.dt(), std::move(frames));
}

// ---------------------------------------------------------------------------

std::vector<CosineMode> cosine_modes(const Grid& grid, std::size_t count) {
  if (count > grid.node_count())
    throw InputError("over-resolved basis: " + std::to_string(count) + " modes requested, " +
                     std::to_string(grid.node_count()) + " nodes available");

  // 1D eigenvalue of -lap_h for wavenumber k on an axis with n cells.
  auto axis_eig = [&](int a, int k) {
    const double h = grid.spacing(a);
    return -2.0 * (std::cos(std::numbers::pi * k / grid.cells(a)) - 1.0) / (h * h);
  };

  std::vector<CosineMode> all;
  all.reserve(grid.node_count());
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    CosineMode mode;
    mode.wavenumber = grid.multi_index(n);
    double rho = 1.0;
    for (int a = 0; a < grid.dim(); ++a) rho += axis_eig(a, mode.wavenumber[a]);
    mode.eigenvalue = rho;
    all.push_back(std::move(mode));
  }
  std::stable_sort(all.begin(), all.end(), [](const CosineMode& l, const CosineMode& r) {
    if (l.eigenvalue != r.eigenvalue) return l.eigenvalue < r.eigenvalue;
    return l.wavenumber < r.wavenumber;
  });
  all.resize(count);

  const double measure = grid.measure();
  for (auto& mode : all) {
    mode.values.resize(grid.node_count());
    // Discrete orthogonality: sum_i cos^2(k pi (i+1/2)/n) = n/2 for 0 < k < n, n for k = 0.
    double scale = 1.0 / std::sqrt(measure);
    for (int a = 0; a < grid.dim(); ++a)
      if (mode.wavenumber[a] != 0) scale *= std::numbers::sqrt2;
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const auto x = grid.center(n);
      double v = scale;
      for (int a = 0; a < grid.dim(); ++a)
        v *= std::cos(std::numbers::pi * mode.wavenumber[a] * x[a] / grid.length(a));
      mode.values[n] = v;
    }
  }
  return all;
}

}  // namespace llb
