#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "llb/version.hpp"
#include "llbcli/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimal control toolkit for the Landau-Lifshitz-Bloch equation", "llbctl"};
  app.set_version_flag("--version", std::string(llb::version_string));
  app.require_subcommand(1);

  llbcli::RunOptions opts;
  std::string config, out, control;
  std::uint64_t seed = 0;

  for (const auto& name : llbcli::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Run configuration (JSON)")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--seed", seed, "Seed for random sampling (overrides the config)");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
    sub->add_option("--control", control,
                    "Control path CSV (t, U_1..U_N); default is control.initial")
        ->check(CLI::ExistingFile);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : llbcli::exit_validation;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  opts.config_path = config;
  opts.out = out;
  if (chosen->count("--seed") > 0) opts.seed = seed;
  if (!control.empty()) opts.control = control;
  return llbcli::run_file(chosen->get_name(), opts, std::cout, std::cerr);
}
