#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"
#include "wdn/error.hpp"

using namespace wdn;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run_cli(const std::string& args) {
  const std::string out = "wdn_cli_test.out", err = "wdn_cli_test.err";
  const std::string cmd = std::string("\"") + WDN_CLI_PATH + "\" " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::remove(out.c_str());
  std::remove(err.c_str());
  return r;
}

std::string fixture(const std::string& name) { return std::string(WDN_FIXTURE_DIR) + "/" + name; }

Run run_doc(int (*command)(const InputDocument&, const CommandOptions&, std::ostream&, std::ostream&),
            const std::string& text, CommandOptions options = {}) {
  std::ostringstream out, err;
  Run r;
  r.code = command(parse_input(text), options, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string with_section(const char* text, const std::string& header, const std::string& replacement) {
  std::string s = text;
  const auto at = s.find(header);
  REQUIRE(at != std::string::npos);
  const auto end = s.find("\n[", at + 1);
  s.replace(at, end == std::string::npos ? std::string::npos : end + 1 - at, replacement);
  return s;
}

}  // namespace

TEST_CASE("solve prints the flow table and exits 0") {
  const Run r = run_cli("solve " + fixture("case_a.wdn") + " --reference");
  CHECK(r.code == 0);
  CHECK(r.out.find("converged") != std::string::npos);
  CHECK(r.out.find("Q_m") != std::string::npos);
}

TEST_CASE("machine output parses as a report") {
  const Run r = run_cli("cost " + fixture("case_b.wdn") + " --format machine");
  REQUIRE(r.code == 0);
  const Report report = report_from_json(nlohmann::json::parse(r.out));
  CHECK(report.command == "cost");
  CHECK(report.converged);
  REQUIRE(report.cost);
  CHECK(report.cost->pumps.size() == 1);
}

TEST_CASE("explicit loops are selectable") {
  const Run a = run_cli("solve " + fixture("case_a.wdn") + " --loops explicit --format machine");
  const Run b = run_cli("solve " + fixture("case_a.wdn") + " --loops auto --format machine");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const Report ra = report_from_json(nlohmann::json::parse(a.out));
  const Report rb = report_from_json(nlohmann::json::parse(b.out));
  for (std::size_t j = 0; j < ra.pipes.size(); ++j) CHECK(ra.pipes[j].flow == doctest::Approx(rb.pipes[j].flow));
}

TEST_CASE("exit codes") {
  CHECK(run_cli("solve /nonexistent/x.wdn").code == static_cast<int>(ExitCode::Parse));
  CHECK(run_cli("solve").code == static_cast<int>(ExitCode::Parse));
  CHECK(run_cli("frobnicate x").code == static_cast<int>(ExitCode::Parse));
  CHECK(run_cli("solve " + fixture("case_a.wdn") + " --loops sideways").code == static_cast<int>(ExitCode::Parse));
  const Run v = run_cli("validate --case a --case b");
  CHECK(v.code == 0);
  CHECK(v.out.find("FAIL") == std::string::npos);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("full validation passes") {
  const Run v = run_cli("validate");
  CHECK(v.code == 0);
  CHECK(v.out.find("case c") != std::string::npos);
}

TEST_CASE("validation errors exit 2") {
  std::string text = case_a_text;
  text.replace(text.find("4     100           0.3"), 22, "4     100           0.9");
  const Run r = run_doc(run_solve, text);
  CHECK(r.code == static_cast<int>(ExitCode::Validation));
  CHECK(r.err.find("unbalanced demand") != std::string::npos);

  CommandOptions explicit_loops;
  explicit_loops.loops = LoopMode::Explicit;
  CHECK(run_doc(run_solve, case_b_text, explicit_loops).code == static_cast<int>(ExitCode::Validation));

  const std::string bare = with_section(case_a_text, "[ECONOMICS]", "");
  CHECK(run_doc(run_cost, bare).code == static_cast<int>(ExitCode::Validation));
  CHECK(run_doc(run_design, bare).code == static_cast<int>(ExitCode::Validation));

  CommandOptions bad_tolerance;
  bad_tolerance.tol_mass = -1.0;
  CHECK(run_doc(run_solve, case_a_text, bad_tolerance).code == static_cast<int>(ExitCode::Validation));
}

TEST_CASE("unreachable tolerance exits 3 and still reports") {
  CommandOptions options;
  options.tol_energy = 1e-300;
  options.tol_mass = 1e-300;
  const Run r = run_doc(run_solve, case_c_text, options);
  CHECK(r.code == static_cast<int>(ExitCode::NonConvergence));
  CHECK(r.out.find("Pipe") != std::string::npos);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("infeasible design exits 4") {
  const std::string text = with_section(case_a_text, "[DESIGN]", "[DESIGN]\nP_MIN 29.5\nP_MAX 30\nSTARTS 4\n");
  const Run r = run_doc(run_design, text);
  CHECK(r.code == static_cast<int>(ExitCode::InfeasibleDesign));
  CHECK(r.out.find("INFEASIBLE") != std::string::npos);
}

TEST_CASE("design reports the baseline comparison") {
  CommandOptions options;
  options.format = OutputFormat::Machine;
  options.seed = 5;
  const Run r = run_doc(run_design, case_a_text, options);
  REQUIRE(r.code == 0);
  const Report report = report_from_json(nlohmann::json::parse(r.out));
  REQUIRE(report.design);
  CHECK(report.design->feasible);
  REQUIRE(report.design->baseline_total);
  REQUIRE(report.design->deltas);
  CHECK(report.design->deltas->total > 0.0);
  CHECK(report.cost->total <= *report.design->baseline_total);
  const Run again = run_doc(run_design, case_a_text, options);
  CHECK(again.out == r.out);
}

TEST_CASE("reference flag without reference data is a validation error") {
  const std::string text = with_section(case_a_text, "[REFERENCE]", "");
  CommandOptions options;
  options.reference = true;
  CHECK(run_doc(run_solve, text, options).code == static_cast<int>(ExitCode::Validation));
}

TEST_CASE("bundled benchmarks meet their thresholds") {
  for (const BundledCase& c : bundled_cases()) {
    for (const CaseCheck& check : validate_case(c)) {
      CAPTURE(check.case_name);
      CAPTURE(check.metric);
      CAPTURE(check.value);
      CHECK(check.pass);
    }
  }
}
