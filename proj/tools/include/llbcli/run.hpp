#pragma once

// Subcommand execution for llbctl. Every run writes manifest.json first and
// then its CSV/text outputs into the output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "llbcli/config.hpp"

namespace llbcli {

enum ExitStatus : int {
  exit_ok = 0,
  exit_error = 1,       // I/O or other unexpected failure
  exit_validation = 2,  // configuration or input validation failed
  exit_solver = 3,      // state blow-up or implicit-solve failure
  exit_check = 4,       // a verification check missed its tolerance
};

struct RunOptions {
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> control;
  std::filesystem::path config_path;
  bool quiet = false;
};

/// Names of the supported subcommands.
const std::vector<std::string>& subcommands();

/// Runs one subcommand on a parsed configuration. Library exceptions are
/// mapped to exit statuses; messages go to `err`, progress to `log` unless quiet.
int run_command(const std::string& subcommand, const RunConfig& cfg, const RunOptions& opts,
                std::ostream& log, std::ostream& err);

/// Parses the configuration file and runs the subcommand.
int run_file(const std::string& subcommand, const RunOptions& opts, std::ostream& log,
             std::ostream& err);

}  // namespace llbcli
