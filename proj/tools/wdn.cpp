#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "wdn/commands.hpp"
#include "wdn/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Steady-state water distribution network solver and tank design optimizer"};
  app.require_subcommand(1);

  wdn::CommandOptions options;
  std::string input;

  const std::map<std::string, wdn::LoopMode> loop_modes{{"auto", wdn::LoopMode::Auto},
                                                        {"explicit", wdn::LoopMode::Explicit}};
  const std::map<std::string, wdn::OutputFormat> formats{{"table", wdn::OutputFormat::Table},
                                                         {"machine", wdn::OutputFormat::Machine}};

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("input", input, "Network description (.wdn)")->required();
    cmd->add_option("--loops", options.loops, "Loop source: auto (cycle basis) or explicit ([LOOPS])")
        ->transform(CLI::CheckedTransformer(loop_modes, CLI::ignore_case));
    cmd->add_flag("--reference", options.reference, "Compare with the [REFERENCE] series");
    cmd->add_option("--format", options.format, "Output format: table or machine")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    cmd->add_option("--tolerance-mass", options.tol_mass, "Mass residual tolerance [m3/s]");
    cmd->add_option("--tolerance-energy", options.tol_energy, "Energy residual tolerance [m]");
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve the steady-state flow problem");
  add_common(solve);
  CLI::App* cost = app.add_subcommand("cost", "Solve and itemize the network cost");
  add_common(cost);
  CLI::App* design = app.add_subcommand("design", "Optimize tank depth and elevation");
  add_common(design);
  design->add_option("--seed", options.seed, "Seed for the multi-start sampler");
  CLI::App* validate = app.add_subcommand("validate", "Run the bundled benchmarks against their references");
  validate->add_option("--case", options.cases, "Restrict to case a, b or c")
      ->check(CLI::IsMember({"a", "b", "c"}));
  validate->add_option("--format", options.format, "Output format: table or machine")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(wdn::ExitCode::Parse);
  }

  if (solve->parsed()) return wdn::cmd_solve(input, options, std::cout, std::cerr);
  if (cost->parsed()) return wdn::cmd_cost(input, options, std::cout, std::cerr);
  if (design->parsed()) return wdn::cmd_design(input, options, std::cout, std::cerr);
  return wdn::cmd_validate(options, std::cout, std::cerr);
}
