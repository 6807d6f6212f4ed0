#pragma once

// Numerical evaluation of optimality certificates at a candidate control:
// projection-formula residual, sampled variational inequality, critical cone,
// second-order curvature, global-optimality and uniqueness conditions, and the
// smallness monitor for 3D runs.
//
// Generic analysis constants are inputs. Whenever a Lipschitz constant is
// replaced by an empirical estimate the corresponding verdict is
// `indeterminate`, never `pass`.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "llb/optimize.hpp"

namespace llb {

struct FirstOrderResult {
  /// RMS over i and t of U_i(t) - P_[a_i,b_i](-pairing_i(t)), normalized by sqrt(T).
  double pf_residual = 0.0;
  /// Upsilon = U + pairing.
  std::vector<double> upsilon;
  std::vector<double> pairing;
};

FirstOrderResult first_order_residual(const ControlProblem& problem, const ControlPath& U,
                                      GradientMode mode = GradientMode::consistent);

/// min over `samples` random feasible V of <Upsilon, V - U> / ||V - U||.
/// Entries with an infinite bound are sampled as U + N(0, 1) on that side.
double fooc_min_sample(const ControlPath& U, std::span<const double> upsilon,
                       std::size_t samples, std::uint64_t seed);

enum class ConeConstraint : std::uint8_t { free, nonnegative, nonpositive, zero };

struct CriticalCone {
  std::vector<ConeConstraint> mask;
  std::vector<bool> active_lower;
  std::vector<bool> active_upper;
};

/// An entry is active at a bound when |U - bound| <= tol_active (1 + |b - a|);
/// it is forced to zero when |Upsilon| > tol_upsilon or both bounds are active.
CriticalCone critical_cone_mask(const ControlPath& U, std::span<const double> upsilon,
                                double tol_active, double tol_upsilon);

/// Default activity tolerance: 1e-8 (relative to the box width).
double default_tol_active();
/// Default Upsilon tolerance: max(1e-6 ||Upsilon||_inf, 10 ||r||_inf) with
/// r = U - P(U - Upsilon) the pointwise stationarity defect. Inactive entries
/// have |Upsilon| = |r|, so they stay free at an approximate stationary point.
double default_tol_upsilon(const ControlPath& U, std::span<const double> upsilon);

/// Applies the cone's sign and zero constraints to a direction.
std::vector<double> project_onto_cone(std::span<const double> h, const CriticalCone& cone);

struct CurvatureSample {
  double q_adj = 0.0;
  double q_fd = 0.0;
  double rel_err = 0.0;
  /// False when U +- eps h blew up; q_fd and rel_err are NaN then.
  bool fd_valid = true;
};

/// Second derivative of the reduced cost along h:
///   Q(h) = int h^2 + int (phi'[h] x m) . zeta(h) + int (phi x z[h]) . zeta(h) + int phi'[h] . zeta(h)
/// with z from the tangent solver and phi' from the costate-derivative solver.
double curvature_adjoint(const ControlProblem& problem, const ControlPath& U,
                         std::span<const double> h, GradientMode mode = GradientMode::consistent);

/// (I(U + eps h) - 2 I(U) + I(U - eps h)) / eps^2
double curvature_fd(const ControlProblem& problem, const ControlPath& U,
                    std::span<const double> h, double eps);

/// Both routes; rel_err = |Q_adj - Q_fd| / max(|Q_fd|, 1e-300).
CurvatureSample curvature(const ControlProblem& problem, const ControlPath& U,
                          std::span<const double> h, double eps,
                          GradientMode mode = GradientMode::consistent);

struct ScanOptions {
  std::size_t directions = 8;
  std::uint64_t seed = 0;
  double tol_active = 1e-8;
  std::optional<double> tol_upsilon;
  GradientMode mode = GradientMode::consistent;
  /// Worker threads for independent direction solves; 0 reads LLB_THREADS.
  unsigned threads = 0;
};

struct ScanResult {
  /// min Q(h) / ||h||^2 over non-degenerate sampled directions.
  double min_rayleigh = 0.0;
  bool positive = false;
  /// Every sampled direction collapsed to zero under the cone mask.
  bool cone_trivial = false;
  std::vector<double> rayleigh;
};

ScanResult second_order_scan(const ControlProblem& problem, const ControlPath& U,
                             const ScanOptions& opts = {});

struct UserConstants {
  std::optional<double> c_global;  // C(Omega, T, a, b, m0) of the global condition
  std::optional<double> c_tilde;   // smallness constant for n = 3
  std::optional<double> c2;        // state Lipschitz constant (squared form)
  std::optional<double> c3;        // costate Lipschitz constant (squared form)
  std::optional<double> c4n;       // H1 -> L4 embedding constant
};

enum class Verdict { pass, fail, indeterminate };
std::string_view to_string(Verdict v);

struct LipschitzSampling {
  std::size_t pairs = 4;
  /// Perturbation amplitude (intensity units) for the second control of a pair.
  double radius = 0.1;
  std::uint64_t seed = 0;
};

struct GlobalReport {
  double m_l2_h1 = 0.0;     // ||m||_{L2(0,T;H1)}
  double phi_l2_l2 = 0.0;   // ||phi||_{L2(0,T;L2)}
  double phi_linf_l2 = 0.0; // ||phi||_{Linf(0,T;L2)}
  double m_linf_h1 = 0.0;   // ||m||_{Linf(0,T;H1)}
  double b_h1_sq = 0.0;     // max_k ||B_k||^2_{H1}
  double c_ab = 0.0;        // ||a||^2 + ||b||^2 in L2(0,T;R^N)
  double measure = 0.0;     // |Omega|
  double final_time = 0.0;

  double go_lhs = 0.0;
  bool go_holds = false;         // go_lhs <= 1/2
  bool go_holds_strict = false;  // go_lhs < 1/2 (unique global optimum)
  Verdict go_status = Verdict::indeterminate;

  double c2 = 0.0;
  double c3 = 0.0;
  bool c2_estimated = false;
  bool c3_estimated = false;
  double uloc_lhs = 0.0;
  double uloc_rhs = 0.0;          // 1/T
  double uloc_time_threshold = 0.0;  // 1/uloc_lhs: the comparison holds for T below this
  Verdict uloc_status = Verdict::indeterminate;
};

/// Throws InputError when c_global or c4n is missing (no estimator exists for them).
GlobalReport global_and_uniqueness_report(const ControlProblem& problem, const ControlPath& U,
                                          const UserConstants& constants,
                                          const LipschitzSampling& sampling = {},
                                          GradientMode mode = GradientMode::consistent);

struct SmallnessReport {
  double initial = 0.0;    // ||lap_h m(0)||^2
  double max_value = 0.0;  // max_t ||lap_h m(t)||^2
  double growth = 0.0;     // max_value / initial (inf if initial == 0 < max_value)
  std::optional<double> threshold;  // 1 / sqrt(C~)
  bool below_threshold = false;
};

SmallnessReport smallness_monitor(const Trajectory& traj, std::optional<double> c_tilde);

struct CertifyOptions {
  GradientMode mode = GradientMode::consistent;
  double tol_active = 1e-8;
  std::optional<double> tol_upsilon;
  std::size_t fooc_samples = 200;
  std::size_t curvature_directions = 5;
  double fd_eps = 1e-3;
  ScanOptions scan;
  LipschitzSampling lipschitz;
  UserConstants constants;
  std::uint64_t seed = 0;
};

struct CurvatureRecord {
  std::size_t direction = 0;
  CurvatureSample sample;
};

struct CertificateReport {
  double pf_residual = 0.0;
  double fooc_min_sample = 0.0;
  std::vector<double> upsilon;
  CriticalCone cone;
  std::vector<CurvatureRecord> curvature_samples;
  ScanResult scan;
  GlobalReport global;
  SmallnessReport smallness;
  UserConstants constants_used;
};

CertificateReport certify(const ControlProblem& problem, const ControlPath& U,
                          const CertifyOptions& opts);

/// Worker count from LLB_THREADS (>= 1).
unsigned worker_threads();

}  // namespace llb
