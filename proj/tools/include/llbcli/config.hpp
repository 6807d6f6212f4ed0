#pragma once

// Run configuration for llbctl: a JSON document with fixed sections, parsed
// strictly (unknown keys are errors) and validated as a whole so that every
// violation is reported at once.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llb/certify.hpp"
#include "llb/cg.hpp"
#include "llb/coils.hpp"
#include "llb/grid.hpp"
#include "llb/optimize.hpp"
#include "llb/state.hpp"

namespace llbcli {

/// A vector field given in closed form, by file, or (for the desired
/// trajectory) as an uncontrolled run from other initial data.
struct FieldSpec {
  enum class Kind { zero, constant, cosine, gaussian, file, simulate, final_desired };
  Kind kind = Kind::zero;
  llb::Vec3 value{};      // constant
  llb::Vec3 offset{};     // cosine, gaussian
  llb::Vec3 amplitude{};  // cosine, gaussian
  std::array<int, 3> wavenumber{0, 0, 0};
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double width = 0.1;
  std::filesystem::path path;
  /// Initial data of the uncontrolled run (kind == simulate).
  std::shared_ptr<const FieldSpec> initial;

  bool closed_form() const noexcept {
    return kind == Kind::zero || kind == Kind::constant || kind == Kind::cosine ||
           kind == Kind::gaussian;
  }
};

inline FieldSpec final_desired_spec() {
  FieldSpec f;
  f.kind = FieldSpec::Kind::final_desired;
  return f;
}

/// Value of a closed-form spec at a point of a grid's domain.
llb::Vec3 evaluate(const FieldSpec& spec, const llb::Grid& grid, std::array<double, 3> x);

struct CoilSpec {
  enum class Kind { gaussian, uniform, file };
  Kind kind = Kind::gaussian;
  std::array<double, 3> center{0.5, 0.5, 0.5};
  double width = 0.1;
  int axis = 0;
  llb::Vec3 direction{1.0, 0.0, 0.0};
  std::filesystem::path path;
};

/// Either a constant or a per-node CSV (columns t, v_1..v_N).
struct NodeValues {
  double value = 0.0;
  std::filesystem::path path;
  bool from_file() const noexcept { return !path.empty(); }
};

struct CheckSettings {
  double grad_eps = 1e-4;
  std::size_t grad_directions = 3;
  double grad_tol = 1e-3;
  std::vector<double> taylor_eps{1e-1, 1e-2, 1e-3};
  double taylor_min_slope = 1.9;
  double curvature_eps = 1e-3;
  std::size_t curvature_directions = 5;
  double curvature_tol = 1e-2;
};

struct ConvergenceSettings {
  enum class Study { temporal, spatial };
  Study study = Study::temporal;
  std::vector<double> dts{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  std::vector<int> cells{16, 32, 64, 128, 256};
  std::optional<double> order_min;
  std::optional<double> order_max;
};

struct OracleSettings {
  std::size_t modes = 8;
  std::size_t substeps = 1;
  double tol = 1e-3;
};

struct OutputSettings {
  std::size_t diagnostics_every = 1;
  bool snapshots = false;
};

struct RunConfig {
  // grid
  int dim = 1;
  std::array<int, 3> cells{1, 1, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  // time
  double final_time = 1.0;
  double dt = 1e-3;
  // data
  std::vector<CoilSpec> coils;
  NodeValues lower{-std::numeric_limits<double>::infinity(), {}};
  NodeValues upper{std::numeric_limits<double>::infinity(), {}};
  NodeValues initial_control{0.0, {}};
  FieldSpec m0;
  bool check_ic = true;
  double ic_tol = 1e-8;
  FieldSpec m_d;
  FieldSpec m_omega = final_desired_spec();
  // numerics
  llb::SolverOptions solver;
  llb::DescentOptions descent;
  llb::CertifyOptions certify;
  CheckSettings checks;
  ConvergenceSettings convergence;
  OracleSettings oracle;
  OutputSettings output;
  std::uint64_t seed = 0;

  /// Canonical JSON text of the input document (sorted keys).
  std::string canonical;
  /// Directory relative file paths are resolved against.
  std::filesystem::path base_dir;

  llb::Grid grid() const { return llb::Grid(dim, cells, lengths); }
};

/// Reads and validates a configuration file. Throws llb::ValidationError
/// listing every problem found (unknown keys, missing files, shape errors...).
RunConfig parse_config(const std::filesystem::path& path);
/// Same, from JSON text; relative paths resolve against base_dir.
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// ---------------------------------------------------------------------------
// Assembly of library objects from a validated configuration.

llb::CoilSet build_coils(const RunConfig& cfg);
llb::VectorField build_field(const FieldSpec& spec, const RunConfig& cfg);
llb::StateProblem build_state(const RunConfig& cfg);
llb::ControlProblem build_problem(const RunConfig& cfg);
/// Control path on the configured time grid: bounds from the config and
/// intensities from `control_csv` when given, else from control.initial.
llb::ControlPath build_control(const RunConfig& cfg,
                               const std::optional<std::filesystem::path>& control_csv = {});

/// Reads a CSV with a header line and columns t, v_1..v_N[, ...]; returns the
/// (K+1) x N row-major values of the first N value columns.
std::vector<double> read_node_csv(const std::filesystem::path& path, std::size_t nodes,
                                  std::size_t columns, double dt);

}  // namespace llbcli
