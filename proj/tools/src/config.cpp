#include "llbcli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "llb/errors.hpp"
#include "llb/field_io.hpp"
#include "json.hpp"

namespace llbcli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Issues = std::vector<std::string>;

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

/// Strict view of one JSON object: every key read is recorded, and finish()
/// reports the remaining keys as unknown.
class Section {
 public:
  Section(const json* node, std::string path, Issues& issues)
      : node_(node), path_(std::move(path)), issues_(issues) {
    if (node_ && !node_->is_object()) {
      issues_.push_back(path_ + ": expected an object");
      node_ = nullptr;
    }
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return join_path(path_, key); }

  const json* get(const std::string& key) {
    used_.insert(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  Section section(const std::string& key) { return Section(get(key), at(key), issues_); }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (v->is_number())
        out = v->get<double>();
      else
        issues_.push_back(at(key) + ": expected a number");
    }
  }
  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = get(key)) {
      if (v->is_null())
        out.reset();
      else if (v->is_number())
        out = v->get<double>();
      else
        issues_.push_back(at(key) + ": expected a number or null");
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out, long long min_value) {
    if (const json* v = get(key)) {
      if (v->is_number_integer() && v->get<long long>() >= min_value)
        out = static_cast<Int>(v->get<long long>());
      else
        issues_.push_back(at(key) + ": expected an integer >= " + std::to_string(min_value));
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (v->is_boolean())
        out = v->get<bool>();
      else
        issues_.push_back(at(key) + ": expected true or false");
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (v->is_string())
        out = v->get<std::string>();
      else
        issues_.push_back(at(key) + ": expected a string");
    }
  }
  void vec3(const std::string& key, llb::Vec3& out) {
    if (const json* v = get(key)) {
      if (v->is_array() && v->size() == 3 && (*v)[0].is_number() && (*v)[1].is_number() &&
          (*v)[2].is_number())
        out = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
      else
        issues_.push_back(at(key) + ": expected an array of 3 numbers");
    }
  }
  /// Array of up to 3 numbers (or one number broadcast to every axis).
  template <class T>
  void axes(const std::string& key, std::array<T, 3>& out, std::size_t dim,
            std::size_t max_entries = 0) {
    const json* v = get(key);
    if (!v) return;
    if (v->is_number()) {
      for (std::size_t a = 0; a < dim; ++a) out[a] = v->get<T>();
      return;
    }
    const std::size_t hi = std::max(dim, max_entries);
    if (!v->is_array() || v->size() < dim || v->size() > hi) {
      issues_.push_back(at(key) + ": expected " + std::to_string(dim) +
                        (hi > dim ? " to " + std::to_string(hi) : std::string()) + " entries");
      return;
    }
    for (std::size_t a = 0; a < v->size(); ++a) {
      if (!(*v)[a].is_number()) {
        issues_.push_back(at(key) + ": entries must be numbers");
        return;
      }
      out[a] = (*v)[a].get<T>();
    }
  }
  template <class T>
  void list(const std::string& key, std::vector<T>& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_array() || v->empty()) {
      issues_.push_back(at(key) + ": expected a non-empty array of numbers");
      return;
    }
    std::vector<T> tmp;
    for (const auto& e : *v) {
      if (!e.is_number()) {
        issues_.push_back(at(key) + ": entries must be numbers");
        return;
      }
      tmp.push_back(e.get<T>());
    }
    out = std::move(tmp);
  }

  void finish() {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!used_.count(it.key())) issues_.push_back("unknown key '" + at(it.key()) + "'");
  }

 private:
  const json* node_;
  std::string path_;
  Issues& issues_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

FieldSpec parse_field(Section s, Issues& issues, const fs::path& base, std::size_t dim,
                      bool allow_simulate, bool allow_final) {
  FieldSpec f;
  std::string kind = "zero";
  s.string("kind", kind);
  if (kind == "zero") {
    f.kind = FieldSpec::Kind::zero;
  } else if (kind == "constant") {
    f.kind = FieldSpec::Kind::constant;
    s.vec3("value", f.value);
  } else if (kind == "cosine") {
    f.kind = FieldSpec::Kind::cosine;
    s.vec3("offset", f.offset);
    s.vec3("amplitude", f.amplitude);
    s.axes("wavenumber", f.wavenumber, dim, 3);
  } else if (kind == "gaussian") {
    f.kind = FieldSpec::Kind::gaussian;
    s.vec3("offset", f.offset);
    s.vec3("amplitude", f.amplitude);
    s.axes("center", f.center, dim, 3);
    s.number("width", f.width);
    if (!(f.width > 0.0)) issues.push_back(s.at("width") + ": must be positive");
  } else if (kind == "file") {
    f.kind = FieldSpec::Kind::file;
    std::string p;
    s.string("path", p);
    if (p.empty())
      issues.push_back(s.at("path") + ": required for kind 'file'");
    else
      f.path = resolve(base, p);
  } else if (kind == "simulate" && allow_simulate) {
    f.kind = FieldSpec::Kind::simulate;
    FieldSpec init = parse_field(s.section("initial"), issues, base, dim, false, false);
    f.initial = std::make_shared<const FieldSpec>(std::move(init));
  } else if (kind == "final_desired" && allow_final) {
    f.kind = FieldSpec::Kind::final_desired;
  } else {
    issues.push_back(s.at("kind") + ": unsupported field kind '" + kind + "'");
  }
  s.finish();
  return f;
}

NodeValues parse_node_values(const json* v, const std::string& path, Issues& issues,
                             const fs::path& base, NodeValues fallback) {
  if (!v) return fallback;
  NodeValues out;
  if (v->is_number()) {
    out.value = v->get<double>();
  } else if (v->is_string()) {
    out.path = resolve(base, v->get<std::string>());
  } else {
    issues.push_back(path + ": expected a number or a CSV path");
    return fallback;
  }
  return out;
}

void check_file(const fs::path& p, const std::string& where, Issues& issues) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) issues.push_back(where + ": file not found: " + p.string());
}

}  // namespace

llb::Vec3 evaluate(const FieldSpec& spec, const llb::Grid& grid, std::array<double, 3> x) {
  switch (spec.kind) {
    case FieldSpec::Kind::zero:
      return {};
    case FieldSpec::Kind::constant:
      return spec.value;
    case FieldSpec::Kind::cosine: {
      double c = 1.0;
      for (int a = 0; a < grid.dim(); ++a)
        c *= std::cos(std::numbers::pi * spec.wavenumber[a] * x[a] / grid.length(a));
      return spec.offset + c * spec.amplitude;
    }
    case FieldSpec::Kind::gaussian: {
      double r2 = 0.0;
      for (int a = 0; a < grid.dim(); ++a) r2 += (x[a] - spec.center[a]) * (x[a] - spec.center[a]);
      return spec.offset + std::exp(-r2 / (2.0 * spec.width * spec.width)) * spec.amplitude;
    }
    default:
      throw llb::InputError("field spec has no closed form");
  }
}

namespace {

/// Largest normal derivative of a closed-form field on the boundary, from a
/// symmetric difference across each wall at every boundary node.
double neumann_defect(const FieldSpec& spec, const llb::Grid& grid) {
  double worst = 0.0;
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const auto idx = grid.multi_index(n);
    for (int a = 0; a < grid.dim(); ++a) {
      if (idx[a] != 0 && idx[a] != grid.cells(a) - 1) continue;
      const double delta = 1e-6 * grid.length(a);
      for (double wall : {0.0, grid.length(a)}) {
        if ((wall == 0.0) != (idx[a] == 0)) continue;
        auto x = grid.center(n);
        x[a] = wall + delta;
        const llb::Vec3 plus = evaluate(spec, grid, x);
        x[a] = wall - delta;
        const llb::Vec3 minus = evaluate(spec, grid, x);
        worst = std::max(worst, llb::norm(plus - minus) / (2.0 * delta));
      }
    }
  }
  return worst;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw llb::ValidationError({std::string("config is not valid JSON: ") + e.what()});
  }
  Issues issues;
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.canonical = doc.dump();
  Section root(&doc, "", issues);

  // grid
  std::size_t before = issues.size();
  bool grid_ok = false;
  {
    Section s = root.section("grid");
    if (!root.get("grid")) issues.push_back("grid: required section");
    s.integer("dim", cfg.dim, 1);
    if (cfg.dim < 1 || cfg.dim > 3) {
      issues.push_back("grid.dim: must be 1, 2 or 3");
      cfg.dim = 1;
    }
    const std::size_t d = static_cast<std::size_t>(cfg.dim);
    if (!s.get("cells")) issues.push_back("grid.cells: required");
    s.axes("cells", cfg.cells, d);
    s.axes("lengths", cfg.lengths, d);
    for (std::size_t a = 0; a < d; ++a) {
      if (cfg.cells[a] < 1) issues.push_back("grid.cells: entries must be >= 1");
      if (!(cfg.lengths[a] > 0.0)) issues.push_back("grid.lengths: entries must be positive");
    }
    grid_ok = issues.size() == before;
    s.finish();
  }
  const std::size_t field_dim = static_cast<std::size_t>(cfg.dim);
  // time
  before = issues.size();
  {
    Section s = root.section("time");
    if (!root.get("time")) issues.push_back("time: required section");
    s.number("T", cfg.final_time);
    s.number("dt", cfg.dt);
    s.finish();
    if (!(cfg.final_time > 0.0)) issues.push_back("time.T: must be positive");
    if (!(cfg.dt > 0.0)) {
      issues.push_back("time.dt: must be positive");
    } else if (cfg.final_time > 0.0) {
      const double k = std::round(cfg.final_time / cfg.dt);
      if (k < 1.0 || std::abs(k * cfg.dt - cfg.final_time) > 1e-12 * cfg.final_time)
        issues.push_back("time.dt: does not divide time.T");
    }
  }
  const bool time_ok = issues.size() == before;
  // coils
  if (const json* list = root.get("coils")) {
    if (!list->is_array()) {
      issues.push_back("coils: expected an array");
    } else {
      for (std::size_t i = 0; i < list->size(); ++i) {
        Section s(&(*list)[i], "coils[" + std::to_string(i) + "]", issues);
        CoilSpec c;
        std::string kind = "gaussian";
        s.string("kind", kind);
        if (kind == "gaussian") {
          c.kind = CoilSpec::Kind::gaussian;
          s.axes("center", c.center, static_cast<std::size_t>(cfg.dim));
          s.number("width", c.width);
          s.integer("axis", c.axis, 0);
          if (c.axis > 2) issues.push_back(s.at("axis") + ": must be 0, 1 or 2");
          if (!(c.width > 0.0)) issues.push_back(s.at("width") + ": must be positive");
        } else if (kind == "uniform") {
          c.kind = CoilSpec::Kind::uniform;
          s.vec3("direction", c.direction);
        } else if (kind == "file") {
          c.kind = CoilSpec::Kind::file;
          std::string p;
          s.string("path", p);
          if (p.empty())
            issues.push_back(s.at("path") + ": required for kind 'file'");
          else
            c.path = resolve(base_dir, p);
        } else {
          issues.push_back(s.at("kind") + ": unsupported coil kind '" + kind + "'");
        }
        s.finish();
        cfg.coils.push_back(std::move(c));
      }
    }
  }
  // bounds and control
  {
    Section s = root.section("bounds");
    cfg.lower = parse_node_values(s.get("a"), "bounds.a", issues, base_dir, cfg.lower);
    cfg.upper = parse_node_values(s.get("b"), "bounds.b", issues, base_dir, cfg.upper);
    s.finish();
    if (!cfg.lower.from_file() && !cfg.upper.from_file() && cfg.lower.value > cfg.upper.value)
      issues.push_back("bounds: empty box (a > b)");
  }
  {
    Section s = root.section("control");
    cfg.initial_control = parse_node_values(s.get("initial"), "control.initial", issues,
                                            base_dir, cfg.initial_control);
    s.finish();
  }
  // initial data and targets
  {
    Section s = root.section("initial");
    cfg.m0 = parse_field(s.section("m0"), issues, base_dir, field_dim, false, false);
    s.boolean("check_ic", cfg.check_ic);
    s.number("ic_tol", cfg.ic_tol);
    s.finish();
  }
  {
    Section s = root.section("targets");
    cfg.m_d = parse_field(s.section("m_d"), issues, base_dir, field_dim, true, false);
    if (s.get("m_omega"))
      cfg.m_omega = parse_field(s.section("m_omega"), issues, base_dir, field_dim, false, true);
    s.finish();
  }
  // solver
  {
    Section s = root.section("solver");
    s.number("cg_tol", cfg.solver.cg.target_tol);
    s.number("cg_accept_tol", cfg.solver.cg.accept_tol);
    s.integer("cg_max_iter", cfg.solver.cg.max_iter, 1);
    s.number("blowup_threshold", cfg.solver.blowup_threshold);
    s.number("stability_warning", cfg.solver.stability_warning);
    s.finish();
    if (!(cfg.solver.cg.target_tol > 0.0)) issues.push_back("solver.cg_tol: must be positive");
    if (!(cfg.solver.cg.accept_tol >= cfg.solver.cg.target_tol))
      issues.push_back("solver.cg_accept_tol: must be >= solver.cg_tol");
    if (!(cfg.solver.blowup_threshold > 0.0))
      issues.push_back("solver.blowup_threshold: must be positive");
  }
  // optimize
  std::string gradient = "consistent";
  {
    Section s = root.section("optimize");
    s.integer("max_iter", cfg.descent.max_iter, 0);
    s.number("tol", cfg.descent.tol);
    s.number("reference_step", cfg.descent.reference_step);
    s.number("initial_step", cfg.descent.initial_step);
    s.number("armijo_c1", cfg.descent.armijo_c1);
    s.integer("max_halvings", cfg.descent.max_halvings, 0);
    s.string("gradient", gradient);
    s.finish();
    if (gradient == "consistent")
      cfg.descent.mode = llb::GradientMode::consistent;
    else if (gradient == "continuous")
      cfg.descent.mode = llb::GradientMode::continuous;
    else
      issues.push_back("optimize.gradient: expected 'consistent' or 'continuous'");
    if (!(cfg.descent.tol > 0.0)) issues.push_back("optimize.tol: must be positive");
    if (!(cfg.descent.reference_step > 0.0))
      issues.push_back("optimize.reference_step: must be positive");
    if (!(cfg.descent.initial_step > 0.0))
      issues.push_back("optimize.initial_step: must be positive");
    if (!(cfg.descent.armijo_c1 > 0.0 && cfg.descent.armijo_c1 < 1.0))
      issues.push_back("optimize.armijo_c1: must lie in (0, 1)");
  }
  // certify
  {
    auto& c = cfg.certify;
    c.mode = cfg.descent.mode;
    Section s = root.section("certify");
    {
      Section k = s.section("constants");
      k.optional_number("C", c.constants.c_global);
      k.optional_number("C_tilde", c.constants.c_tilde);
      k.optional_number("C2", c.constants.c2);
      k.optional_number("C3", c.constants.c3);
      k.optional_number("C4n", c.constants.c4n);
      k.finish();
    }
    s.number("tol_active", c.tol_active);
    s.optional_number("tol_upsilon", c.tol_upsilon);
    s.integer("n_dirs", c.scan.directions, 1);
    s.integer("fooc_samples", c.fooc_samples, 1);
    s.integer("curvature_directions", c.curvature_directions, 0);
    s.number("fd_eps", c.fd_eps);
    s.integer("lipschitz_pairs", c.lipschitz.pairs, 1);
    s.number("lipschitz_radius", c.lipschitz.radius);
    s.finish();
    if (!(c.tol_active > 0.0)) issues.push_back("certify.tol_active: must be positive");
    if (c.tol_upsilon && !(*c.tol_upsilon >= 0.0))
      issues.push_back("certify.tol_upsilon: must be >= 0");
    if (!(c.fd_eps > 0.0)) issues.push_back("certify.fd_eps: must be positive");
    if (!(c.lipschitz.radius > 0.0))
      issues.push_back("certify.lipschitz_radius: must be positive");
  }
  // checks
  {
    auto& c = cfg.checks;
    Section s = root.section("checks");
    s.number("grad_eps", c.grad_eps);
    s.integer("grad_directions", c.grad_directions, 1);
    s.number("grad_tol", c.grad_tol);
    s.list("taylor_eps", c.taylor_eps);
    s.number("taylor_min_slope", c.taylor_min_slope);
    s.number("curvature_eps", c.curvature_eps);
    s.integer("curvature_directions", c.curvature_directions, 1);
    s.number("curvature_tol", c.curvature_tol);
    s.finish();
    if (!(c.grad_eps > 0.0)) issues.push_back("checks.grad_eps: must be positive");
    if (!(c.curvature_eps > 0.0)) issues.push_back("checks.curvature_eps: must be positive");
    if (c.taylor_eps.size() < 2) issues.push_back("checks.taylor_eps: needs >= 2 entries");
    for (double e : c.taylor_eps)
      if (!(e > 0.0)) issues.push_back("checks.taylor_eps: entries must be positive");
  }
  // convergence
  {
    auto& c = cfg.convergence;
    Section s = root.section("convergence");
    std::string study = "temporal";
    s.string("study", study);
    if (study == "temporal")
      c.study = ConvergenceSettings::Study::temporal;
    else if (study == "spatial")
      c.study = ConvergenceSettings::Study::spatial;
    else
      issues.push_back("convergence.study: expected 'temporal' or 'spatial'");
    s.list("dts", c.dts);
    s.list("cells", c.cells);
    s.optional_number("order_min", c.order_min);
    s.optional_number("order_max", c.order_max);
    s.finish();
    if (c.dts.size() < 2) issues.push_back("convergence.dts: needs >= 2 entries");
    if (c.cells.size() < 2) issues.push_back("convergence.cells: needs >= 2 entries");
    for (double d : c.dts) {
      const double k = std::round(cfg.final_time / (0.5 * d));
      if (!(d > 0.0) || std::abs(k * 0.5 * d - cfg.final_time) > 1e-12 * cfg.final_time) {
        issues.push_back("convergence.dts: every entry and its half must divide time.T");
        break;
      }
    }
    for (int n : c.cells)
      if (n < 2) issues.push_back("convergence.cells: entries must be >= 2");
  }
  // oracle
  {
    Section s = root.section("oracle");
    s.integer("modes", cfg.oracle.modes, 1);
    s.integer("substeps", cfg.oracle.substeps, 1);
    s.number("tol", cfg.oracle.tol);
    s.finish();
  }
  // output
  {
    Section s = root.section("output");
    s.integer("diagnostics_every", cfg.output.diagnostics_every, 1);
    s.boolean("snapshots", cfg.output.snapshots);
    s.finish();
  }
  root.integer("seed", cfg.seed, 0);
  root.finish();

  // Cross-checks that need a valid grid (and time grid for node CSVs).
  if (grid_ok) {
    const llb::Grid grid = cfg.grid();
    if (cfg.oracle.modes > grid.node_count())
      issues.push_back("oracle.modes: over-resolved basis (" + std::to_string(grid.node_count()) +
                       " nodes)");
    for (std::size_t i = 0; i < cfg.coils.size(); ++i) {
      const auto& c = cfg.coils[i];
      if (c.kind != CoilSpec::Kind::file) continue;
      const std::string where = "coils[" + std::to_string(i) + "].path";
      check_file(c.path, where, issues);
      if (fs::exists(c.path)) {
        try {
          (void)llb::read_field(c.path, grid);
        } catch (const llb::Error& e) {
          issues.push_back("coils[" + std::to_string(i) + "]: coil/grid incompatibility: " +
                           e.what());
        }
      }
    }
    auto check_field_file = [&](const FieldSpec& f, const std::string& where) {
      if (f.kind != FieldSpec::Kind::file) return;
      check_file(f.path, where + ".path", issues);
      if (fs::exists(f.path)) {
        try {
          (void)llb::read_field(f.path, grid);
        } catch (const llb::Error& e) {
          issues.push_back(where + ": " + e.what());
        }
      }
    };
    check_field_file(cfg.m0, "initial.m0");
    check_field_file(cfg.m_d, "targets.m_d");
    if (cfg.m_d.kind == FieldSpec::Kind::simulate)
      check_field_file(*cfg.m_d.initial, "targets.m_d.initial");
    check_field_file(cfg.m_omega, "targets.m_omega");

    const std::size_t nodes =
        time_ok ? static_cast<std::size_t>(std::llround(cfg.final_time / cfg.dt)) + 1 : 0;
    auto check_csv = [&](const NodeValues& v, const std::string& where) {
      if (!v.from_file()) return;
      if (!time_ok) return;
      check_file(v.path, where, issues);
      if (fs::exists(v.path)) {
        try {
          (void)read_node_csv(v.path, nodes, cfg.coils.size(), cfg.dt);
        } catch (const llb::Error& e) {
          issues.push_back(where + ": " + e.what());
        }
      }
    };
    check_csv(cfg.lower, "bounds.a");
    check_csv(cfg.upper, "bounds.b");
    check_csv(cfg.initial_control, "control.initial");

    if (cfg.check_ic && cfg.m0.closed_form()) {
      const double d = neumann_defect(cfg.m0, grid);
      if (d > cfg.ic_tol) {
        std::ostringstream os;
        os << "initial.m0: fails the Neumann compatibility check (max |dm0/dn| = " << d
           << " > initial.ic_tol = " << cfg.ic_tol << ")";
        issues.push_back(os.str());
      }
    }
  }

  if (!issues.empty()) throw llb::ValidationError(std::move(issues));
  return cfg;
}

RunConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw llb::ValidationError({"cannot read config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), fs::absolute(path).parent_path());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

std::vector<double> read_node_csv(const fs::path& path, std::size_t nodes, std::size_t columns,
                                  double dt) {
  std::ifstream in(path);
  if (!in) throw llb::InputError("cannot open " + path.string());
  std::string line;
  std::vector<double> out;
  out.reserve(nodes * columns);
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("t", 0) == 0) continue;  // header line
    }
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw llb::InputError("row " + std::to_string(row) + ": non-numeric entry '" + cell + "'");
      }
    }
    if (cells.size() < columns + 1)
      throw llb::InputError("row " + std::to_string(row) + ": expected t and " +
                            std::to_string(columns) + " value columns");
    if (std::abs(cells[0] - dt * static_cast<double>(row)) > 1e-9 * std::max(1.0, cells[0]))
      throw llb::InputError("row " + std::to_string(row) + ": time " + std::to_string(cells[0]) +
                            " is off the time grid");
    for (std::size_t c = 0; c < columns; ++c) out.push_back(cells[c + 1]);
    ++row;
  }
  if (row != nodes)
    throw llb::InputError("expected " + std::to_string(nodes) + " time nodes, found " +
                          std::to_string(row));
  return out;
}

llb::CoilSet build_coils(const RunConfig& cfg) {
  const llb::Grid grid = cfg.grid();
  llb::CoilSet coils(grid);
  for (std::size_t i = 0; i < cfg.coils.size(); ++i) {
    const auto& c = cfg.coils[i];
    switch (c.kind) {
      case CoilSpec::Kind::gaussian:
        coils.add(llb::gaussian_coil(grid, c.center, c.width, c.axis));
        break;
      case CoilSpec::Kind::uniform:
        coils.add(llb::uniform_coil(grid, c.direction));
        break;
      case CoilSpec::Kind::file:
        try {
          coils.add(llb::read_field(c.path, grid));
        } catch (const llb::Error& e) {
          throw llb::InputError("coils[" + std::to_string(i) + "]: coil/grid incompatibility: " +
                                e.what());
        }
        break;
    }
  }
  return coils;
}

namespace {

llb::VectorField closed_form_field(const FieldSpec& spec, const llb::Grid& grid) {
  llb::VectorField f(grid);
  for (std::size_t n = 0; n < grid.node_count(); ++n) f[n] = evaluate(spec, grid, grid.center(n));
  return f;
}

}  // namespace

llb::VectorField build_field(const FieldSpec& spec, const RunConfig& cfg) {
  const llb::Grid grid = cfg.grid();
  if (spec.closed_form()) return closed_form_field(spec, grid);
  if (spec.kind == FieldSpec::Kind::file) return llb::read_field(spec.path, grid);
  throw llb::InputError("field spec needs a trajectory context");
}

llb::StateProblem build_state(const RunConfig& cfg) {
  llb::SimConfig sim{cfg.final_time, cfg.dt, cfg.solver, {}};
  return llb::StateProblem{build_field(cfg.m0, cfg), build_coils(cfg), sim};
}

llb::ControlProblem build_problem(const RunConfig& cfg) {
  llb::StateProblem state = build_state(cfg);
  const std::size_t frames = state.sim.steps() + 1;
  llb::TrackingTargets targets;
  if (cfg.m_d.kind == FieldSpec::Kind::simulate) {
    llb::StateProblem reference = state;
    reference.m0 = build_field(*cfg.m_d.initial, cfg);
    const llb::Trajectory md =
        reference.solve(llb::ControlPath(frames, state.coils.size(), cfg.dt));
    targets.desired = md.frames();
  } else {
    targets.desired.assign(frames, build_field(cfg.m_d, cfg));
  }
  if (cfg.m_omega.kind == FieldSpec::Kind::final_desired)
    targets.terminal = targets.desired.back();
  else
    targets.terminal = build_field(cfg.m_omega, cfg);
  return llb::ControlProblem{std::move(state), std::move(targets)};
}

llb::ControlPath build_control(const RunConfig& cfg,
                               const std::optional<fs::path>& control_csv) {
  const std::size_t nodes = static_cast<std::size_t>(std::llround(cfg.final_time / cfg.dt)) + 1;
  const std::size_t N = cfg.coils.size();
  llb::ControlPath U(nodes, N, cfg.dt);
  auto fill = [&](const NodeValues& v, std::vector<double>& out) {
    if (v.from_file())
      out = read_node_csv(v.path, nodes, N, cfg.dt);
    else
      std::fill(out.begin(), out.end(), v.value);
  };
  fill(cfg.lower, U.lower());
  fill(cfg.upper, U.upper());
  for (std::size_t n = 0; n < U.lower().size(); ++n)
    if (U.lower()[n] > U.upper()[n]) throw llb::InputError("bounds: empty box (a > b)");
  if (control_csv)
    U.values() = read_node_csv(*control_csv, nodes, N, cfg.dt);
  else
    fill(cfg.initial_control, U.values());
  return U;
}

}  // namespace llbcli
