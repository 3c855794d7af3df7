#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wdn/io.hpp"

namespace wdn {

enum class OutputFormat { Table, Machine };
enum class LoopMode { Auto, Explicit };

struct CommandOptions {
  LoopMode loops = LoopMode::Auto;
  bool reference = false;
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::Table;
  std::optional<double> tol_mass;
  std::optional<double> tol_energy;
  std::vector<std::string> cases;  // validate filter; empty means all
};

/// Each command writes its report to `out`, diagnostics to `err`, and returns
/// the process exit code.
int cmd_solve(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_cost(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_design(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_validate(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Same commands on an already parsed document.
int run_solve(const InputDocument& doc, const CommandOptions& options, std::ostream& out, std::ostream& err);
int run_cost(const InputDocument& doc, const CommandOptions& options, std::ostream& out, std::ostream& err);
int run_design(const InputDocument& doc, const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Network, loop set and solver settings derived from a document.
struct Scenario {
  Network network;
  LoopSet loops;
  SolverOptions solver;
};

Scenario build_scenario(const InputDocument& doc, const CommandOptions& options);

struct BundledCase {
  std::string name;  // "a", "b", "c"
  std::string text;
};

std::vector<BundledCase> bundled_cases();

struct CaseCheck {
  std::string case_name;
  std::string metric;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

/// Runs one benchmark and compares it with its bundled reference series.
std::vector<CaseCheck> validate_case(const BundledCase& bundled);

}  // namespace wdn
