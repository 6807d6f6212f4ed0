#include "llb/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "llb/errors.hpp"

namespace llb {

FirstOrderResult first_order_residual(const ControlProblem& problem, const ControlPath& U,
                                      GradientMode mode) {
  const GradientResult g = reduced_gradient(problem, U, mode);
  FirstOrderResult r;
  r.pairing = g.pairing;
  r.upsilon = g.gradient;
  if (U.coils() == 0) return r;
  std::vector<double> target(g.pairing.size());
  for (std::size_t n = 0; n < target.size(); ++n) target[n] = -g.pairing[n];
  target = project_box(target, U.lower(), U.upper());
  for (std::size_t n = 0; n < target.size(); ++n) target[n] = U.values()[n] - target[n];
  r.pf_residual =
      std::sqrt(control_inner(target, target, U.coils(), U.dt()) / U.final_time());
  return r;
}

double fooc_min_sample(const ControlPath& U, std::span<const double> upsilon,
                       std::size_t samples, std::uint64_t seed) {
  if (U.coils() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> d(U.values().size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t n = 0; n < d.size(); ++n) {
      const double a = U.lower()[n], b = U.upper()[n], u = U.values()[n];
      double v;
      if (std::isfinite(a) && std::isfinite(b)) {
        v = a + (b - a) * unit(rng);
      } else {
        v = u + gauss(rng);
        v = std::min(b, std::max(a, v));
      }
      d[n] = v - u;
    }
    const double dn = std::sqrt(control_inner(d, d, U.coils(), U.dt()));
    if (dn == 0.0) continue;
    worst = std::min(worst, control_inner(upsilon, d, U.coils(), U.dt()) / dn);
  }
  return worst;
}

double default_tol_active() { return 1e-8; }

double default_tol_upsilon(const ControlPath& U, std::span<const double> upsilon) {
  double m = 0.0, r = 0.0;
  for (std::size_t n = 0; n < upsilon.size(); ++n) {
    m = std::max(m, std::abs(upsilon[n]));
    const double p = std::min(U.upper()[n], std::max(U.lower()[n], U.values()[n] - upsilon[n]));
    r = std::max(r, std::abs(U.values()[n] - p));
  }
  return std::max(1e-6 * m, 10.0 * r);
}

CriticalCone critical_cone_mask(const ControlPath& U, std::span<const double> upsilon,
                                double tol_active, double tol_upsilon) {
  if (!(tol_active > 0.0) || !(tol_upsilon >= 0.0))
    throw InputError("critical cone tolerances must be positive");
  if (upsilon.size() != U.values().size()) throw InputError("critical cone: size mismatch");
  const std::size_t M = upsilon.size();
  CriticalCone c;
  c.mask.assign(M, ConeConstraint::free);
  c.active_lower.assign(M, false);
  c.active_upper.assign(M, false);
  for (std::size_t n = 0; n < M; ++n) {
    const double a = U.lower()[n], b = U.upper()[n], u = U.values()[n];
    const double width = (std::isfinite(a) && std::isfinite(b)) ? std::abs(b - a) : 0.0;
    const double tol = tol_active * (1.0 + width);
    c.active_lower[n] = std::isfinite(a) && std::abs(u - a) <= tol;
    c.active_upper[n] = std::isfinite(b) && std::abs(b - u) <= tol;
    if (std::abs(upsilon[n]) > tol_upsilon || (c.active_lower[n] && c.active_upper[n]))
      c.mask[n] = ConeConstraint::zero;
    else if (c.active_lower[n])
      c.mask[n] = ConeConstraint::nonnegative;
    else if (c.active_upper[n])
      c.mask[n] = ConeConstraint::nonpositive;
  }
  return c;
}

std::vector<double> project_onto_cone(std::span<const double> h, const CriticalCone& cone) {
  std::vector<double> out(h.begin(), h.end());
  for (std::size_t n = 0; n < out.size(); ++n) {
    switch (cone.mask[n]) {
      case ConeConstraint::free:
        break;
      case ConeConstraint::nonnegative:
        out[n] = std::max(0.0, out[n]);
        break;
      case ConeConstraint::nonpositive:
        out[n] = std::min(0.0, out[n]);
        break;
      case ConeConstraint::zero:
        out[n] = 0.0;
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double curvature_adjoint(const ControlProblem& problem, const ControlPath& U,
                         std::span<const double> h, GradientMode mode) {
  const CoilSet& coils = problem.state.coils;
  const SolverOptions& opts = problem.state.sim.solver;
  const ControlPath dU = U.with_values(std::vector<double>(h.begin(), h.end()));
  const Trajectory m = problem.state.solve(U);
  const bool consistent = mode == GradientMode::consistent;
  const AdjointScheme scheme = consistent ? AdjointScheme::transpose : AdjointScheme::continuous;
  const Trajectory phi = tracking_adjoint(problem, U, m, scheme);
  const LinearizationPoint point{m, U, coils};
  const Trajectory z = solve_tangent(point, dU, opts);

  std::vector<VectorField> rhs = costate_derivative_rhs(point, z, phi, dU);
  if (consistent) {
    // No coupling at t_K in the transposed scheme: only the tracking term survives.
    rhs.back() = -1.0 * z.back();
  }
  const Trajectory dphi =
      solve_adjoint(AdjointProblem{m, U, coils, std::move(rhs), z.back()}, opts, scheme);

  const std::size_t F = m.frame_count();
  auto density = [&](std::size_t k, const VectorField& zeta) {
    VectorField w = cross(dphi[k], m[k]);
    w += cross(phi[k], z[k]);
    w += dphi[k];
    return inner(w, zeta);
  };

  double coupling = 0.0;
  if (consistent) {
    for (std::size_t k = 0; k + 1 < F; ++k)
      coupling += m.dt() * density(k, step_control(dU, coils, k));
  } else {
    std::vector<double> series(F);
    for (std::size_t k = 0; k < F; ++k) series[k] = density(k, synthesize(dU, coils, k));
    coupling = time_integral(series, m.dt());
  }
  return control_inner(h, h, U.coils(), U.dt()) + coupling;
}

double curvature_fd(const ControlProblem& problem, const ControlPath& U,
                    std::span<const double> h, double eps) {
  std::vector<double> plus = U.values(), minus = U.values();
  for (std::size_t n = 0; n < plus.size(); ++n) {
    plus[n] += eps * h[n];
    minus[n] -= eps * h[n];
  }
  const double jp = reduced_cost(problem, U.with_values(std::move(plus))).total;
  const double j0 = reduced_cost(problem, U).total;
  const double jm = reduced_cost(problem, U.with_values(std::move(minus))).total;
  return (jp - 2.0 * j0 + jm) / (eps * eps);
}

CurvatureSample curvature(const ControlProblem& problem, const ControlPath& U,
                          std::span<const double> h, double eps, GradientMode mode) {
  CurvatureSample s;
  s.q_adj = curvature_adjoint(problem, U, h, mode);
  try {
    s.q_fd = curvature_fd(problem, U, h, eps);
    s.rel_err = std::abs(s.q_adj - s.q_fd) / std::max(std::abs(s.q_fd), 1e-300);
  } catch (const SolverError& e) {
    if (e.kind() != SolverFailure::blow_up) throw;
    s.fd_valid = false;
    s.q_fd = std::numeric_limits<double>::quiet_NaN();
    s.rel_err = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("LLB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::vector<double>> cone_directions(const ControlPath& U, const CriticalCone& cone,
                                                 std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> dirs;
  for (std::size_t d = 0; d < count; ++d) {
    std::vector<double> h(U.values().size());
    for (double& v : h) v = gauss(rng);
    h = project_onto_cone(h, cone);
    const double n = U.coils() == 0 ? 0.0 : std::sqrt(control_inner(h, h, U.coils(), U.dt()));
    if (n > 1e-14) {
      for (double& v : h) v /= n;
    } else {
      h.clear();  // degenerate
    }
    dirs.push_back(std::move(h));
  }
  return dirs;
}

}  // namespace

ScanResult second_order_scan(const ControlProblem& problem, const ControlPath& U,
                             const ScanOptions& opts) {
  const FirstOrderResult fo = first_order_residual(problem, U, opts.mode);
  const double tol_up = opts.tol_upsilon.value_or(default_tol_upsilon(U, fo.upsilon));
  const CriticalCone cone = critical_cone_mask(U, fo.upsilon, opts.tol_active, tol_up);
  const auto dirs = cone_directions(U, cone, opts.directions, opts.seed);

  ScanResult res;
  std::vector<double> q(dirs.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(dirs.size(), opts.threads == 0 ? worker_threads() : opts.threads,
               [&](std::size_t i) {
                 if (!dirs[i].empty()) q[i] = curvature_adjoint(problem, U, dirs[i], opts.mode);
               });
  res.min_rayleigh = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (dirs[i].empty()) continue;
    res.rayleigh.push_back(q[i]);  // directions have unit norm
    res.min_rayleigh = std::min(res.min_rayleigh, q[i]);
  }
  res.cone_trivial = res.rayleigh.empty();
  if (res.cone_trivial) res.min_rayleigh = std::numeric_limits<double>::quiet_NaN();
  res.positive = !res.cone_trivial && res.min_rayleigh > 0.0;
  return res;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "PASS";
    case Verdict::fail:
      return "FAIL";
    case Verdict::indeterminate:
      return "INDETERMINATE";
  }
  return "INDETERMINATE";
}

namespace {

std::vector<std::pair<ControlPath, ControlPath>> sample_pairs(const ControlPath& U,
                                                              const LipschitzSampling& s) {
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<ControlPath, ControlPath>> pairs;
  for (std::size_t p = 0; p < s.pairs; ++p) {
    std::vector<double> v = U.values();
    for (double& x : v) x += s.radius * gauss(rng);
    pairs.emplace_back(U, U.with_values(project_box(v, U.lower(), U.upper())));
  }
  return pairs;
}

}  // namespace

GlobalReport global_and_uniqueness_report(const ControlProblem& problem, const ControlPath& U,
                                          const UserConstants& constants,
                                          const LipschitzSampling& sampling, GradientMode mode) {
  std::vector<std::string> missing;
  if (!constants.c_global) missing.emplace_back("C (global optimality constant)");
  if (!constants.c4n) missing.emplace_back("C_{4,n} (H1 -> L4 embedding constant)");
  if (!missing.empty()) {
    std::string msg = "missing constants without estimator fallback:";
    for (const auto& m : missing) msg += " " + m + ";";
    throw InputError(msg);
  }

  const Trajectory m = problem.state.solve(U);
  const AdjointScheme scheme =
      mode == GradientMode::consistent ? AdjointScheme::transpose : AdjointScheme::continuous;
  const Trajectory phi = tracking_adjoint(problem, U, m, scheme);

  GlobalReport r;
  r.m_l2_h1 = time_l2_norm(m, Norm::H1);
  r.phi_l2_l2 = time_l2_norm(phi, Norm::L2);
  r.phi_linf_l2 = max_frame_norm(phi, Norm::L2);
  r.m_linf_h1 = max_frame_norm(m, Norm::H1);
  const double bmax = problem.state.coils.max_h1_norm();
  r.b_h1_sq = bmax * bmax;
  r.c_ab = U.coils() == 0 ? 0.0
                          : control_inner(U.lower(), U.lower(), U.coils(), U.dt()) +
                                control_inner(U.upper(), U.upper(), U.coils(), U.dt());
  r.measure = m.grid().measure();
  r.final_time = m.final_time();

  r.go_lhs = *constants.c_global * (1.0 + r.m_l2_h1) * r.phi_l2_l2;
  r.go_holds = r.go_lhs <= 0.5;
  r.go_holds_strict = r.go_lhs < 0.5;
  r.go_status = r.go_holds ? Verdict::pass : Verdict::fail;

  const auto pairs = (constants.c2 && constants.c3)
                         ? std::vector<std::pair<ControlPath, ControlPath>>{}
                         : sample_pairs(U, sampling);
  if (constants.c2) {
    r.c2 = *constants.c2;
  } else {
    const double ratio = estimate_state_lipschitz(problem.state, pairs).ratio;
    r.c2 = ratio * ratio;
    r.c2_estimated = true;
  }
  if (constants.c3) {
    r.c3 = *constants.c3;
  } else {
    const double ratio = estimate_costate_lipschitz(problem, pairs, mode).ratio;
    r.c3 = ratio * ratio;
    r.c3_estimated = true;
  }

  const double c4 = *constants.c4n;
  const double bracket = 4.0 * r.c2 * r.phi_linf_l2 * r.phi_linf_l2 +
                         (r.c2 + 2.0 * r.c3) * (4.0 * r.c2 * r.c_ab + r.m_linf_h1 + r.measure);
  r.uloc_lhs = 2.0 * c4 * c4 * c4 * c4 * r.b_h1_sq * bracket;
  r.uloc_rhs = 1.0 / r.final_time;
  r.uloc_time_threshold = r.uloc_lhs > 0.0 ? 1.0 / r.uloc_lhs
                                           : std::numeric_limits<double>::infinity();
  if (r.c2_estimated || r.c3_estimated)
    r.uloc_status = Verdict::indeterminate;
  else
    r.uloc_status = r.uloc_lhs < r.uloc_rhs ? Verdict::pass : Verdict::fail;
  return r;
}

SmallnessReport smallness_monitor(const Trajectory& traj, std::optional<double> c_tilde) {
  SmallnessReport r;
  for (std::size_t k = 0; k < traj.frame_count(); ++k) {
    const VectorField lap = laplacian(traj[k]);
    const double v = inner(lap, lap);
    if (k == 0) r.initial = v;
    r.max_value = std::max(r.max_value, v);
  }
  if (r.initial > 0.0)
    r.growth = r.max_value / r.initial;
  else
    r.growth = r.max_value > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  if (c_tilde && *c_tilde > 0.0) {
    r.threshold = 1.0 / std::sqrt(*c_tilde);
    r.below_threshold = r.max_value < *r.threshold;
  }
  return r;
}

CertificateReport certify(const ControlProblem& problem, const ControlPath& U,
                          const CertifyOptions& opts) {
  CertificateReport rep;
  rep.constants_used = opts.constants;

  const FirstOrderResult fo = first_order_residual(problem, U, opts.mode);
  rep.pf_residual = fo.pf_residual;
  rep.upsilon = fo.upsilon;
  rep.fooc_min_sample = fooc_min_sample(U, fo.upsilon, opts.fooc_samples, opts.seed);
  const double tol_up = opts.tol_upsilon.value_or(default_tol_upsilon(U, fo.upsilon));
  rep.cone = critical_cone_mask(U, fo.upsilon, opts.tol_active, tol_up);

  const auto dirs = cone_directions(U, rep.cone, opts.curvature_directions, opts.seed + 1);
  std::vector<CurvatureSample> samples(dirs.size());
  parallel_for(dirs.size(), worker_threads(), [&](std::size_t i) {
    if (!dirs[i].empty()) samples[i] = curvature(problem, U, dirs[i], opts.fd_eps, opts.mode);
  });
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (!dirs[i].empty()) rep.curvature_samples.push_back({i, samples[i]});

  ScanOptions scan = opts.scan;
  scan.mode = opts.mode;
  scan.tol_active = opts.tol_active;
  scan.tol_upsilon = tol_up;
  rep.scan = second_order_scan(problem, U, scan);

  rep.global = global_and_uniqueness_report(problem, U, opts.constants, opts.lipschitz, opts.mode);
  rep.smallness = smallness_monitor(problem.state.solve(U), opts.constants.c_tilde);
  return rep;
}

}  // namespace llb
