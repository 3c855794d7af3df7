#include <doctest.h>

#include "support.hpp"
#include "wdn/design.hpp"
#include "wdn/error.hpp"

using namespace wdn;

namespace {

struct Problem {
  InputDocument doc;
  Network net;
  LoopSet loops;
  DesignBounds bounds;
  EconomicParams econ;
  WindParams wind;
  FoundationParams foundation;
};

Problem problem(const char* text) {
  Problem p;
  p.doc = test::case_doc(text);
  p.net = build_network(p.doc.network);
  p.loops = cycle_basis(p.net);
  if (p.doc.design) p.bounds = p.doc.design->bounds;
  p.econ = economics_or_default(p.doc);
  p.wind = wind_or_default(p.doc);
  p.foundation = foundation_or_default(p.doc);
  return p;
}

DesignSolution optimize(const Problem& p, std::uint64_t seed = 1, int starts = 32) {
  DesignOptions opts;
  opts.seed = seed;
  opts.starts = starts;
  opts.baseline = current_design(p.net);
  return solve_dom(p.net, p.loops, p.bounds, p.econ, p.wind, p.foundation, opts);
}

double baseline_cost(const Problem& p) {
  return evaluate_design(p.net, p.loops, current_design(p.net), p.bounds, p.econ, p.wind, p.foundation).cost;
}

// Fresh solve of the returned geometry, checked against the pressure window.
void check_certificate(const Problem& p, const DesignSolution& s) {
  const Network net = apply_design(p.net, s.variables);
  LoopSet loops = p.loops;
  refresh_fixed_heads(loops, net);
  const FlowSolution flow = solve_wfp(net, loops);
  REQUIRE(flow.converged);
  for (std::size_t j : net.junctions()) {
    CHECK(flow.pressures[j] >= p.bounds.p_min - 1e-3);
    CHECK(flow.pressures[j] <= p.bounds.p_max + 1e-3);
  }
  for (const TankDesign& t : s.variables) {
    CHECK(t.water_depth >= p.bounds.h_r_min);
    CHECK(t.water_depth <= p.bounds.h_r_max);
    CHECK(t.height_above_ground >= p.bounds.h_b_min);
    CHECK(t.height_above_ground <= p.bounds.h_b_max);
    CHECK(t.water_depth + t.height_above_ground <= p.bounds.tank_head_limit() + 1e-9);
  }
}

}  // namespace

TEST_CASE("design variables round-trip through the network") {
  const Network net = test::case_network(case_b_text);
  DesignVariables vars = current_design(net);
  REQUIRE(vars.size() == 1);
  CHECK(vars[0] == TankDesign{28.7, 0.0});
  vars[0] = {12.0, 3.0};
  CHECK(current_design(apply_design(net, vars)) == vars);
  CHECK_THROWS_AS(apply_design(net, DesignVariables{}), ValidationError);
}

TEST_CASE("design bounds validation") {
  DesignBounds b;
  CHECK_NOTHROW(validate(b));
  CHECK(b.tank_head_limit() == doctest::Approx(79.5));
  b.p_min = 40;
  CHECK_THROWS_AS(validate(b), ValidationError);
  b = {};
  b.h_r_min = 0;
  CHECK_THROWS_AS(validate(b), ValidationError);
}

TEST_CASE("evaluation reports pressure violations") {
  const Problem p = problem(case_b_text);
  const DesignEvaluation ok = evaluate_design(p.net, p.loops, {{28.7, 0.0}}, p.bounds, p.econ, p.wind, p.foundation);
  CHECK(ok.feasible());
  const DesignEvaluation low = evaluate_design(p.net, p.loops, {{25.0, 0.0}}, p.bounds, p.econ, p.wind, p.foundation);
  CHECK_FALSE(low.feasible());
  CHECK(low.max_violation == doctest::Approx(3.7).epsilon(0.01));
  bool pressure_low = false;
  for (const Violation& v : low.violations) pressure_low |= v.kind == Violation::Kind::PressureLow;
  CHECK(pressure_low);
  CHECK(ok.cost == doctest::Approx(ok.breakdown.total));
}

TEST_CASE("raising the tank raises every junction head by the same amount") {
  const Problem p = problem(case_a_text);
  const DesignEvaluation a = evaluate_design(p.net, p.loops, {{20.84, 0.0}}, p.bounds, p.econ, p.wind, p.foundation);
  const DesignEvaluation b = evaluate_design(p.net, p.loops, {{20.84, 2.0}}, p.bounds, p.econ, p.wind, p.foundation);
  for (std::size_t i = 0; i < a.flow.heads.size(); ++i) CHECK(b.flow.heads[i] - a.flow.heads[i] == doctest::Approx(2.0));
  for (std::size_t j = 0; j < a.flow.flows.size(); ++j) CHECK(b.flow.flows[j] == doctest::Approx(a.flow.flows[j]));
}

TEST_CASE("optimum is never worse than the baseline design") {
  for (const char* text : {case_a_text, case_b_text, case_c_text}) {
    const Problem p = problem(text);
    const DesignSolution s = optimize(p);
    REQUIRE(s.feasible);
    CHECK(s.cost.total <= baseline_cost(p) + 1e-9);
    check_certificate(p, s);
  }
}

TEST_CASE("town network keeps its ground tank at the minimum depth") {
  const Problem p = problem(case_b_text);
  const DesignSolution s = optimize(p);
  REQUIRE(s.feasible);
  CHECK(s.variables[0].height_above_ground == doctest::Approx(0.0));
  CHECK(std::abs(s.variables[0].water_depth - 28.70) <= 0.05);

  DesignSolution base = make_solution(
      p.net, current_design(p.net),
      evaluate_design(p.net, p.loops, current_design(p.net), p.bounds, p.econ, p.wind, p.foundation), p.bounds);
  const CostDeltas d = compare_designs(base, s);
  CHECK(std::abs(d.total) < 5e-4);
  CHECK(std::abs(d.tank_material) < 5e-4);
  CHECK(std::abs(d.tank_foundation) < 5e-4);

  double lowest = 1e9;
  for (std::size_t j : s.network.junctions()) lowest = std::min(lowest, s.flow.pressures[j]);
  CHECK(lowest - p.bounds.p_min <= 0.1);
}

TEST_CASE("rural network is cheaper with an elevated tank") {
  const Problem p = problem(case_a_text);
  const DesignSolution s = optimize(p);
  REQUIRE(s.feasible);
  CHECK(s.variables[0].height_above_ground > 0.0);
  CHECK(s.cost.total < baseline_cost(p));
  check_certificate(p, s);
}

TEST_CASE("fixed seed gives an identical solution") {
  const Problem p = problem(case_a_text);
  const DesignSolution a = optimize(p, 42, 8);
  const DesignSolution b = optimize(p, 42, 8);
  CHECK(a.variables == b.variables);
  CHECK(a.cost.total == b.cost.total);
  CHECK(a.evaluations == b.evaluations);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].start == b.trace[i].start);
    CHECK(a.trace[i].history == b.trace[i].history);
  }
}

TEST_CASE("penalty weight escalates monotonically within a start") {
  const Problem p = problem(case_a_text);
  const DesignSolution s = optimize(p, 3, 6);
  for (const StartTrace& t : s.trace) {
    for (std::size_t i = 1; i < t.history.size(); ++i) CHECK(t.history[i].first >= t.history[i - 1].first);
  }
}

TEST_CASE("impossible pressure window yields an infeasible result") {
  Problem p = problem(case_a_text);
  p.bounds.p_min = 29.5;
  p.bounds.p_max = 30.0;
  const DesignSolution s = optimize(p, 1, 4);
  CHECK_FALSE(s.feasible);
  CHECK(s.max_violation > 1e-3);
  CHECK_FALSE(s.message.empty());
}

TEST_CASE("cost comparison requires the same scenario") {
  const Problem a = problem(case_a_text);
  const Problem b = problem(case_b_text);
  const DesignSolution sa = make_solution(
      a.net, current_design(a.net),
      evaluate_design(a.net, a.loops, current_design(a.net), a.bounds, a.econ, a.wind, a.foundation), a.bounds);
  const DesignSolution sb = make_solution(
      b.net, current_design(b.net),
      evaluate_design(b.net, b.loops, current_design(b.net), b.bounds, b.econ, b.wind, b.foundation), b.bounds);
  CHECK_THROWS_AS(compare_designs(sa, sb), ValidationError);
  CHECK(compare_designs(sa, sa) == CostDeltas{});
}
