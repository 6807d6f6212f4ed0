#include "llb/galerkin.hpp"

#include "llb/errors.hpp"
#include "llb/state.hpp"

namespace llb {

GalerkinBasis::GalerkinBasis(const Grid& grid, std::size_t modes)
    : grid_(grid), modes_(cosine_modes(grid, modes)) {}

std::vector<Vec3> GalerkinBasis::project(const VectorField& f) const {
  require_same_grid(f.grid(), grid_, "galerkin projection");
  const double vol = grid_.cell_volume();
  std::vector<Vec3> a(modes_.size());
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    Vec3 s{};
    for (std::size_t n = 0; n < f.size(); ++n) s += modes_[k].values[n] * f[n];
    a[k] = vol * s;
  }
  return a;
}

VectorField GalerkinBasis::reconstruct(const std::vector<Vec3>& coeffs) const {
  VectorField f(grid_);
  for (std::size_t k = 0; k < modes_.size(); ++k)
    for (std::size_t n = 0; n < f.size(); ++n) f[n] += modes_[k].values[n] * coeffs[k];
  return f;
}

namespace {

using Coeffs = std::vector<Vec3>;

Coeffs rhs(const GalerkinBasis& basis, const Coeffs& a, const VectorField& u) {
  const VectorField m = basis.reconstruct(a);
  const VectorField lap = laplacian(m);
  const VectorField n = reaction(m, lap, u);
  Coeffs out = basis.project(n);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] += (1.0 - basis.mode(k).eigenvalue) * a[k];
  return out;
}

Coeffs combine(const Coeffs& a, double s, const Coeffs& d) {
  Coeffs out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += s * d[k];
  return out;
}

}  // namespace

Trajectory galerkin_simulate(const VectorField& m0, const ControlPath& U, const CoilSet& coils,
                             const GalerkinOptions& opts) {
  require_same_grid(m0.grid(), coils.grid(), "galerkin_simulate");
  if (U.coils() != coils.size()) throw InputError("control path and coil set disagree on N");
  if (U.nodes() < 2) throw InputError("galerkin_simulate needs at least two time nodes");
  if (opts.substeps == 0) throw InputError("galerkin substeps must be positive");

  const GalerkinBasis basis(m0.grid(), opts.modes);
  Coeffs a = basis.project(m0);
  const double h = U.dt() / static_cast<double>(opts.substeps);

  std::vector<VectorField> frames;
  frames.reserve(U.nodes());
  frames.push_back(basis.reconstruct(a));
  for (std::size_t j = 0; j + 1 < U.nodes(); ++j) {
    const VectorField u0 = synthesize(U, coils, j);
    const VectorField u1 = synthesize(U, coils, j + 1);
    auto control_at = [&](double theta) { return (1.0 - theta) * u0 + theta * u1; };
    for (std::size_t s = 0; s < opts.substeps; ++s) {
      const double th0 = static_cast<double>(s) / static_cast<double>(opts.substeps);
      const double th1 = static_cast<double>(s + 1) / static_cast<double>(opts.substeps);
      const VectorField ua = control_at(th0);
      const VectorField um = control_at(0.5 * (th0 + th1));
      const VectorField ub = control_at(th1);
      const Coeffs k1 = rhs(basis, a, ua);
      const Coeffs k2 = rhs(basis, combine(a, 0.5 * h, k1), um);
      const Coeffs k3 = rhs(basis, combine(a, 0.5 * h, k2), um);
      const Coeffs k4 = rhs(basis, combine(a, h, k3), ub);
      for (std::size_t k = 0; k < a.size(); ++k)
        a[k] += (h / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    VectorField f = basis.reconstruct(a);
    if (!f.all_finite())
      throw SolverError(SolverFailure::blow_up, U.dt() * static_cast<double>(j + 1),
                        "galerkin blow-up");
    frames.push_back(std::move(f));
  }
  return Trajectory(m0.grid(), U.dt(), std::move(frames));
}

}  // namespace llb
