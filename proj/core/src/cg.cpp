#include "llb/cg.hpp"

#include <cmath>
#include <string>

#include "llb/errors.hpp"

namespace llb {
namespace {

// y = (I - dt lap) x
void apply(double dt, const VectorField& x, VectorField& lap, VectorField& y) {
  laplacian_into(x, lap);
  for (std::size_t n = 0; n < x.size(); ++n) y[n] = x[n] - dt * lap[n];
}

double dot_all(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += dot(a[n], b[n]);
  return s;
}

}  // namespace

CgResult solve_implicit_diffusion(double dt, const VectorField& b, VectorField& x,
                                  const CgOptions& opts) {
  const Grid& g = b.grid();
  if (!(x.grid() == g)) x = b;
  CgResult res;

  const double bnorm = std::sqrt(dot_all(b, b));
  if (bnorm == 0.0) {
    x.set_zero();
    return res;
  }

  VectorField lap(g), r(g), q(g);
  apply(dt, x, lap, q);
  for (std::size_t n = 0; n < x.size(); ++n) r[n] = b[n] - q[n];
  VectorField p = r;
  double rr = dot_all(r, r);
  res.relative_residual = std::sqrt(rr) / bnorm;

  double best = res.relative_residual;
  int since_best = 0;
  while (res.relative_residual > opts.target_tol && res.iterations < opts.max_iter) {
    apply(dt, p, lap, q);
    const double alpha = rr / dot_all(p, q);
    for (std::size_t n = 0; n < x.size(); ++n) {
      x[n] += alpha * p[n];
      r[n] -= alpha * q[n];
    }
    const double rr_new = dot_all(r, r);
    ++res.iterations;
    res.relative_residual = std::sqrt(rr_new) / bnorm;
    if (res.relative_residual < 0.5 * best) {
      best = res.relative_residual;
      since_best = 0;
    } else if (++since_best > 25 && res.relative_residual <= opts.accept_tol) {
      break;  // round-off floor
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t n = 0; n < x.size(); ++n) p[n] = r[n] + beta * p[n];
  }

  if (!(res.relative_residual <= opts.accept_tol))
    throw SolverError(SolverFailure::implicit_solve, 0.0,
                      "implicit solve failure: relative residual " +
                          std::to_string(res.relative_residual) + " after " +
                          std::to_string(res.iterations) + " iterations");
  return res;
}

}  // namespace llb
