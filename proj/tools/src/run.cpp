#include "llbcli/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

#include "json.hpp"
#include "llb/certify.hpp"
#include "llb/errors.hpp"
#include "llb/field_io.hpp"
#include "llb/galerkin.hpp"
#include "llb/version.hpp"

namespace llbcli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated output with full double precision.
class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << fmt(cells[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// Flat key=value report.
class Report {
 public:
  explicit Report(const fs::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }
  void put(const std::string& key, double v) { out_ << key << '=' << fmt(v) << '\n'; }
  void put(const std::string& key, const std::string& v) { out_ << key << '=' << v << '\n'; }
  void put(const std::string& key, const char* v) { put(key, std::string(v)); }
  void put(const std::string& key, bool v) { put(key, v ? "true" : "false"); }
  void put(const std::string& key, std::size_t v) { out_ << key << '=' << v << '\n'; }
  void put(const std::string& key, const std::optional<double>& v) {
    if (v)
      put(key, *v);
    else
      put(key, "unset");
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> coil_columns(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void write_control_csv(const fs::path& path, const llb::ControlPath& U) {
  std::vector<std::string> header{"t"};
  for (const char* p : {"U_", "a_", "b_"}) {
    auto cols = coil_columns(p, U.coils());
    header.insert(header.end(), cols.begin(), cols.end());
  }
  Csv csv(path, header);
  for (std::size_t j = 0; j < U.nodes(); ++j) {
    std::vector<double> row{U.dt() * static_cast<double>(j)};
    for (std::size_t i = 0; i < U.coils(); ++i) row.push_back(U(j, i));
    for (std::size_t i = 0; i < U.coils(); ++i) row.push_back(U.lower()[j * U.coils() + i]);
    for (std::size_t i = 0; i < U.coils(); ++i) row.push_back(U.upper()[j * U.coils() + i]);
    csv.row(row);
  }
}

void write_node_series(const fs::path& path, const std::string& prefix,
                       const llb::ControlPath& U, std::span<const double> values) {
  std::vector<std::string> header{"t"};
  auto cols = coil_columns(prefix, U.coils());
  header.insert(header.end(), cols.begin(), cols.end());
  Csv csv(path, header);
  for (std::size_t j = 0; j < U.nodes(); ++j) {
    std::vector<double> row{U.dt() * static_cast<double>(j)};
    for (std::size_t i = 0; i < U.coils(); ++i) row.push_back(values[j * U.coils() + i]);
    csv.row(row);
  }
}

std::vector<double> random_direction(std::size_t size, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> h(size);
  for (double& v : h) v = gauss(rng);
  return h;
}

struct Context {
  const RunConfig& cfg;
  const RunOptions& opts;
  std::ostream& log;
  std::uint64_t seed;

  void note(const std::string& msg) const {
    if (!opts.quiet) log << msg << '\n';
  }
  fs::path out(const std::string& name) const { return opts.out / name; }
  llb::ControlProblem problem() const { return build_problem(cfg); }
  llb::ControlPath control() const { return build_control(cfg, opts.control); }
};

// ---------------------------------------------------------------------------

int cmd_simulate(const Context& c) {
  llb::StateProblem state = build_state(c.cfg);
  std::size_t warnings = 0;
  state.sim.solver.warn = [&](std::string_view msg) {
    if (warnings++ == 0) c.note(std::string("warning: ") + std::string(msg));
  };
  const llb::ControlPath U = c.control();
  const llb::Trajectory m = state.solve(U);
  const auto ledger = llb::energy_ledger(m, U, state.coils);

  Csv csv(c.out("diagnostics.csv"), {"k", "t", "l2_sq", "grad_sq", "l4_4", "control_sq",
                                     "defect", "linf", "lap_sq"});
  const std::size_t every = c.cfg.output.diagnostics_every;
  double max_defect = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.frame_count(); ++k) {
    max_defect = std::max(max_defect, ledger[k].defect);
    if (k % every != 0 && k + 1 != m.frame_count()) continue;
    const llb::VectorField lap = llb::laplacian(m[k]);
    const auto& r = ledger[k];
    csv.row(std::vector<double>{static_cast<double>(k), r.t, r.l2_sq, r.grad_sq, r.l4_4,
                                r.control_sq, r.defect, llb::norm(m[k], llb::Norm::Linf),
                                llb::inner(lap, lap)});
    if (c.cfg.output.snapshots) {
      char name[32];
      std::snprintf(name, sizeof name, "m_%06zu.llbf", k);
      llb::write_field(c.out(name), m[k]);
    }
  }
  llb::write_field(c.out("final_state.llbf"), m.back());
  Report rep(c.out("summary.txt"));
  rep.put("steps", m.steps());
  rep.put("final_time", m.final_time());
  rep.put("final_l2_sq", ledger.back().l2_sq);
  rep.put("max_defect", max_defect);
  rep.put("stability_warnings", warnings);
  c.note("simulate: " + std::to_string(m.steps()) + " steps, max defect " + fmt(max_defect));
  return exit_ok;
}

int cmd_optimize(const Context& c) {
  const llb::ControlProblem p = c.problem();
  const llb::ControlPath U0 = c.control();
  Csv history(c.out("history.csv"),
              {"iter", "cost", "tracking", "terminal", "control", "residual", "step"});
  const auto observer = [&](const llb::DescentRecord& r) {
    history.row(std::vector<double>{static_cast<double>(r.iter), r.cost.total, r.cost.tracking,
                                    r.cost.terminal, r.cost.control, r.residual, r.step});
    if (!c.opts.quiet && r.iter % 10 == 0)
      c.log << "iter " << r.iter << " cost " << fmt(r.cost.total) << " residual "
            << fmt(r.residual) << '\n';
  };
  const llb::DescentResult res = llb::projected_gradient_descent(p, U0, c.cfg.descent, observer);
  write_control_csv(c.out("control.csv"), res.control);
  llb::write_field(c.out("final_state.llbf"), p.state.solve(res.control).back());

  Report rep(c.out("summary.txt"));
  rep.put("converged", res.converged);
  rep.put("iterations", res.iterations);
  rep.put("final_cost", res.history.back().cost.total);
  rep.put("final_residual", res.history.back().residual);
  rep.put("tol", c.cfg.descent.tol);
  c.note(std::string("optimize: ") + (res.converged ? "converged" : "NOT converged") + " after " +
         std::to_string(res.iterations) + " iterations, residual " +
         fmt(res.history.back().residual));
  return res.converged ? exit_ok : exit_check;
}

const char* cone_name(llb::ConeConstraint c) {
  switch (c) {
    case llb::ConeConstraint::free:
      return "free";
    case llb::ConeConstraint::nonnegative:
      return "nonneg";
    case llb::ConeConstraint::nonpositive:
      return "nonpos";
    case llb::ConeConstraint::zero:
      return "zero";
  }
  return "free";
}

int cmd_certify(const Context& c) {
  const llb::ControlProblem p = c.problem();
  const llb::ControlPath U = c.control();
  llb::CertifyOptions o = c.cfg.certify;
  o.seed = c.seed;
  o.scan.seed = c.seed + 2;
  o.lipschitz.seed = c.seed + 3;
  const llb::CertificateReport r = llb::certify(p, U, o);

  Report rep(c.out("report.txt"));
  rep.put("gradient_mode", o.mode == llb::GradientMode::consistent ? "consistent" : "continuous");
  rep.put("pf_residual", r.pf_residual);
  rep.put("fooc_min_sample", r.fooc_min_sample);
  rep.put("fooc_samples", o.fooc_samples);
  std::size_t lower = 0, upper = 0, zero = 0;
  for (std::size_t n = 0; n < r.cone.mask.size(); ++n) {
    lower += r.cone.active_lower[n];
    upper += r.cone.active_upper[n];
    zero += r.cone.mask[n] == llb::ConeConstraint::zero;
  }
  rep.put("active_lower_count", lower);
  rep.put("active_upper_count", upper);
  rep.put("cone_zero_count", zero);
  double worst_curv = 0.0;
  for (const auto& s : r.curvature_samples)
    if (s.sample.fd_valid) worst_curv = std::max(worst_curv, s.sample.rel_err);
  rep.put("curvature_max_rel_err", worst_curv);
  rep.put("scan_min_rayleigh", r.scan.min_rayleigh);
  rep.put("scan_positive", r.scan.positive);
  rep.put("scan_cone_trivial", r.scan.cone_trivial);
  const auto& g = r.global;
  rep.put("m_l2_h1", g.m_l2_h1);
  rep.put("phi_l2_l2", g.phi_l2_l2);
  rep.put("phi_linf_l2", g.phi_linf_l2);
  rep.put("m_linf_h1", g.m_linf_h1);
  rep.put("b_h1_sq", g.b_h1_sq);
  rep.put("c_ab", g.c_ab);
  rep.put("measure", g.measure);
  rep.put("final_time", g.final_time);
  rep.put("go_lhs", g.go_lhs);
  rep.put("go_holds", g.go_holds);
  rep.put("go_holds_strict", g.go_holds_strict);
  rep.put("go_status", std::string(llb::to_string(g.go_status)));
  rep.put("c2", g.c2);
  rep.put("c2_estimated", g.c2_estimated);
  rep.put("c3", g.c3);
  rep.put("c3_estimated", g.c3_estimated);
  rep.put("uloc_lhs", g.uloc_lhs);
  rep.put("uloc_rhs", g.uloc_rhs);
  rep.put("uloc_time_threshold", g.uloc_time_threshold);
  rep.put("uloc_status", std::string(llb::to_string(g.uloc_status)));
  rep.put("smallness_initial", r.smallness.initial);
  rep.put("smallness_max", r.smallness.max_value);
  rep.put("smallness_growth", r.smallness.growth);
  rep.put("smallness_threshold", r.smallness.threshold);
  rep.put("smallness_below_threshold", r.smallness.below_threshold);
  rep.put("constant_C", r.constants_used.c_global);
  rep.put("constant_C_tilde", r.constants_used.c_tilde);
  rep.put("constant_C2", r.constants_used.c2);
  rep.put("constant_C3", r.constants_used.c3);
  rep.put("constant_C4n", r.constants_used.c4n);

  write_node_series(c.out("upsilon.csv"), "Y_", U, r.upsilon);
  {
    std::vector<std::string> header{"t"};
    for (std::size_t i = 1; i <= U.coils(); ++i) {
      header.push_back("mask_" + std::to_string(i));
      header.push_back("lower_" + std::to_string(i));
      header.push_back("upper_" + std::to_string(i));
    }
    Csv csv(c.out("masks.csv"), header);
    for (std::size_t j = 0; j < U.nodes(); ++j) {
      std::vector<std::string> row{fmt(U.dt() * static_cast<double>(j))};
      for (std::size_t i = 0; i < U.coils(); ++i) {
        const std::size_t n = j * U.coils() + i;
        row.emplace_back(cone_name(r.cone.mask[n]));
        row.emplace_back(r.cone.active_lower[n] ? "1" : "0");
        row.emplace_back(r.cone.active_upper[n] ? "1" : "0");
      }
      csv.row(row);
    }
  }
  {
    Csv csv(c.out("curvature.csv"), {"direction", "q_adj", "q_fd", "rel_err", "fd_valid"});
    for (const auto& s : r.curvature_samples)
      csv.row(std::vector<std::string>{std::to_string(s.direction), fmt(s.sample.q_adj),
                                       fmt(s.sample.q_fd), fmt(s.sample.rel_err),
                                       s.sample.fd_valid ? "1" : "0"});
  }
  {
    Csv csv(c.out("scan.csv"), {"direction", "rayleigh"});
    for (std::size_t i = 0; i < r.scan.rayleigh.size(); ++i)
      csv.row(std::vector<double>{static_cast<double>(i), r.scan.rayleigh[i]});
  }
  c.note("certify: pf_residual " + fmt(r.pf_residual) + ", GO-C " +
         std::string(llb::to_string(g.go_status)) + ", ULOC " +
         std::string(llb::to_string(g.uloc_status)));
  return exit_ok;
}

int cmd_check_grad(const Context& c) {
  const llb::ControlProblem p = c.problem();
  const llb::ControlPath U = c.control();
  const auto G = llb::reduced_gradient(p, U, c.cfg.descent.mode);
  std::mt19937_64 rng(c.seed);
  Csv csv(c.out("grad.csv"), {"direction", "adjoint", "fd", "rel_err"});
  double worst = 0.0;
  for (std::size_t d = 0; d < c.cfg.checks.grad_directions; ++d) {
    const auto h = random_direction(U.values().size(), rng);
    const double adj = U.coils() == 0 ? 0.0 : llb::control_inner(G.gradient, h, U.coils(), U.dt());
    const double fd = llb::directional_fd(p, U, h, c.cfg.checks.grad_eps);
    const double rel = std::abs(adj - fd) / std::max(std::abs(fd), 1e-300);
    worst = std::max(worst, rel);
    csv.row(std::vector<double>{static_cast<double>(d), adj, fd, rel});
  }
  Report rep(c.out("summary.txt"));
  rep.put("max_rel_err", worst);
  rep.put("tol", c.cfg.checks.grad_tol);
  rep.put("passed", worst <= c.cfg.checks.grad_tol);
  c.note("check-grad: max rel err " + fmt(worst) + " (tol " + fmt(c.cfg.checks.grad_tol) + ")");
  return worst <= c.cfg.checks.grad_tol ? exit_ok : exit_check;
}

int cmd_check_taylor(const Context& c) {
  const llb::StateProblem state = build_state(c.cfg);
  const llb::ControlPath U = c.control();
  std::mt19937_64 rng(c.seed);
  const llb::ControlPath dU = U.with_values(random_direction(U.values().size(), rng));
  const auto study = llb::taylor_remainder_order(state, U, dU, c.cfg.checks.taylor_eps);
  Csv csv(c.out("taylor.csv"), {"eps", "remainder", "first_difference"});
  for (std::size_t i = 0; i < study.eps.size(); ++i)
    csv.row(std::vector<double>{study.eps[i], study.remainder[i], study.first_difference[i]});
  const bool ok = study.remainder_slope >= c.cfg.checks.taylor_min_slope;
  Report rep(c.out("summary.txt"));
  rep.put("remainder_slope", study.remainder_slope);
  rep.put("first_difference_slope", study.first_difference_slope);
  rep.put("min_slope", c.cfg.checks.taylor_min_slope);
  rep.put("passed", ok);
  c.note("check-taylor: remainder slope " + fmt(study.remainder_slope) +
         ", first-difference slope " + fmt(study.first_difference_slope));
  return ok ? exit_ok : exit_check;
}

int cmd_check_curvature(const Context& c) {
  const llb::ControlProblem p = c.problem();
  const llb::ControlPath U = c.control();
  std::mt19937_64 rng(c.seed);
  Csv csv(c.out("curvature.csv"), {"direction", "q_adj", "q_fd", "rel_err", "fd_valid"});
  double worst = 0.0;
  for (std::size_t d = 0; d < c.cfg.checks.curvature_directions; ++d) {
    const auto h = random_direction(U.values().size(), rng);
    const auto s = llb::curvature(p, U, h, c.cfg.checks.curvature_eps, c.cfg.descent.mode);
    if (s.fd_valid) worst = std::max(worst, s.rel_err);
    csv.row(std::vector<std::string>{std::to_string(d), fmt(s.q_adj), fmt(s.q_fd),
                                     fmt(s.rel_err), s.fd_valid ? "1" : "0"});
  }
  Report rep(c.out("summary.txt"));
  rep.put("max_rel_err", worst);
  rep.put("tol", c.cfg.checks.curvature_tol);
  rep.put("passed", worst <= c.cfg.checks.curvature_tol);
  c.note("check-curvature: max rel err " + fmt(worst));
  return worst <= c.cfg.checks.curvature_tol ? exit_ok : exit_check;
}

int cmd_convergence(const Context& c) {
  const auto& conv = c.cfg.convergence;
  std::vector<double> params, errors;
  double lo = 0.0, hi = 0.0;
  if (conv.study == ConvergenceSettings::Study::temporal) {
    if (c.cfg.initial_control.from_file() || c.opts.control)
      throw llb::InputError(
          "convergence: the temporal study needs a constant control.initial (a CSV path is "
          "tied to one time grid)");
    lo = conv.order_min.value_or(0.9);
    hi = conv.order_max.value_or(1.1);
    const llb::StateProblem base = build_state(c.cfg);
    auto final_state = [&](double dt) {
      llb::StateProblem s = base;
      s.sim.dt = dt;
      llb::ControlPath U = s.zero_control(-std::numeric_limits<double>::infinity(),
                                          std::numeric_limits<double>::infinity());
      std::fill(U.values().begin(), U.values().end(), c.cfg.initial_control.value);
      return s.solve(U).back();
    };
    Csv csv(c.out("convergence.csv"), {"dt", "self_difference_l2"});
    for (double dt : conv.dts) {
      const double e = llb::norm(final_state(dt) - final_state(0.5 * dt), llb::Norm::L2);
      params.push_back(dt);
      errors.push_back(e);
      csv.row(std::vector<double>{dt, e});
    }
  } else {
    lo = conv.order_min.value_or(1.9);
    hi = conv.order_max.value_or(2.1);
    const double L = c.cfg.lengths[0];
    const double exact = -(std::numbers::pi / L) * (std::numbers::pi / L);
    Csv csv(c.out("convergence.csv"), {"h", "laplacian_error_l2"});
    for (int n : conv.cells) {
      const llb::Grid g = llb::Grid::line(n, L);
      llb::VectorField f(g);
      for (std::size_t i = 0; i < g.node_count(); ++i)
        f[i] = {std::cos(std::numbers::pi * g.center(i)[0] / L), 0.0, 0.0};
      llb::VectorField r = llb::laplacian(f);
      r.axpy(-exact, f);
      const double e = llb::norm(r, llb::Norm::L2) / llb::norm(f, llb::Norm::L2);
      params.push_back(g.spacing(0));
      errors.push_back(e);
      csv.row(std::vector<double>{g.spacing(0), e});
    }
  }
  const double order = llb::loglog_slope(params, errors);
  const bool ok = order >= lo && order <= hi;
  Report rep(c.out("summary.txt"));
  rep.put("study", conv.study == ConvergenceSettings::Study::temporal ? "temporal" : "spatial");
  rep.put("observed_order", order);
  rep.put("order_min", lo);
  rep.put("order_max", hi);
  rep.put("passed", ok);
  c.note("convergence: observed order " + fmt(order));
  return ok ? exit_ok : exit_check;
}

int cmd_oracle(const Context& c) {
  const llb::StateProblem state = build_state(c.cfg);
  const llb::ControlPath U = c.control();
  const llb::Trajectory m = state.solve(U);
  const llb::Trajectory g = llb::galerkin_simulate(
      state.m0, U, state.coils, {c.cfg.oracle.modes, c.cfg.oracle.substeps});
  Csv csv(c.out("oracle.csv"), {"t", "discrepancy_l2"});
  double worst = 0.0;
  for (std::size_t k = 0; k < m.frame_count(); ++k) {
    const double d = llb::norm(m[k] - g[k], llb::Norm::L2);
    worst = std::max(worst, d);
    if (k % c.cfg.output.diagnostics_every == 0 || k + 1 == m.frame_count())
      csv.row(std::vector<double>{m.time(k), d});
  }
  Report rep(c.out("summary.txt"));
  rep.put("max_discrepancy", worst);
  rep.put("tol", c.cfg.oracle.tol);
  rep.put("modes", c.cfg.oracle.modes);
  rep.put("passed", worst <= c.cfg.oracle.tol);
  c.note("oracle: max discrepancy " + fmt(worst));
  return worst <= c.cfg.oracle.tol ? exit_ok : exit_check;
}

using Command = std::function<int(const Context&)>;

const std::map<std::string, Command>& command_table() {
  static const std::map<std::string, Command> table{
      {"simulate", cmd_simulate},           {"optimize", cmd_optimize},
      {"certify", cmd_certify},             {"check-grad", cmd_check_grad},
      {"check-taylor", cmd_check_taylor},   {"check-curvature", cmd_check_curvature},
      {"convergence", cmd_convergence},     {"oracle", cmd_oracle},
  };
  return table;
}

void write_manifest(const Context& c, const std::string& subcommand) {
  nlohmann::json m;
  m["tool"] = "llbctl";
  m["version"] = llb::version_string;
  m["subcommand"] = subcommand;
  m["config_path"] = c.opts.config_path.empty() ? "" : fs::absolute(c.opts.config_path).string();
  m["config_hash"] = "fnv1a64:" + fnv1a_hex(c.cfg.canonical);
  m["config"] = nlohmann::json::parse(c.cfg.canonical);
  m["seed"] = c.seed;
  m["control"] = c.opts.control ? fs::absolute(*c.opts.control).string() : "";
  m["threads"] = llb::worker_threads();
  std::ofstream out(c.out("manifest.json"));
  if (!out) throw std::runtime_error("cannot write manifest in " + c.opts.out.string());
  out << m.dump(2) << '\n';
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : command_table()) v.push_back(k);
    return v;
  }();
  return names;
}

int run_command(const std::string& subcommand, const RunConfig& cfg, const RunOptions& opts,
                std::ostream& log, std::ostream& err) {
  const auto it = command_table().find(subcommand);
  if (it == command_table().end()) {
    err << "error: unknown subcommand '" << subcommand << "'\n";
    return exit_validation;
  }
  const Context ctx{cfg, opts, log, opts.seed.value_or(cfg.seed)};
  try {
    std::error_code ec;
    fs::create_directories(opts.out, ec);
    if (ec) {
      err << "error: cannot create output directory " << opts.out << ": " << ec.message() << '\n';
      return exit_error;
    }
    write_manifest(ctx, subcommand);
    return it->second(ctx);
  } catch (const llb::ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const llb::InputError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_validation;
  } catch (const llb::SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return e.kind() == llb::SolverFailure::stalled_descent ? exit_check : exit_solver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

int run_file(const std::string& subcommand, const RunOptions& opts, std::ostream& log,
             std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(opts.config_path);
  } catch (const llb::ValidationError& e) {
    err << "invalid configuration " << opts.config_path << ":\n";
    for (const auto& issue : e.issues()) err << "  - " << issue << '\n';
    return exit_validation;
  }
  return run_command(subcommand, cfg, opts, log, err);
}

}  // namespace llbcli
