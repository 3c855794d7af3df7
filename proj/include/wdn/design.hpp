#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wdn/costing.hpp"
#include "wdn/hydraulics.hpp"
#include "wdn/network.hpp"

namespace wdn {

struct TankDesign {
  double water_depth = 0.0;          // h_r, m
  double height_above_ground = 0.0;  // h_b, m
  bool operator==(const TankDesign&) const = default;
};

/// One entry per tank, in Network::tanks() order.
using DesignVariables = std::vector<TankDesign>;

/// Current tank geometry of a network.
DesignVariables current_design(const Network& network);

/// Network with every tank geometry replaced.
Network apply_design(const Network& network, const DesignVariables& vars);

struct DesignBounds {
  double p_min = 10.0, p_max = 30.0;      // m H2O at junctions
  double h_r_min = 0.25, h_r_max = 40.0;  // m
  double h_b_min = 0.0, h_b_max = 39.5;   // m
  std::optional<double> z_max;            // limit on h_b + h_r; defaults to h_b_max + h_r_max

  double tank_head_limit() const { return z_max.value_or(h_b_max + h_r_max); }
  bool operator==(const DesignBounds&) const = default;
};

void validate(const DesignBounds& bounds);

struct Violation {
  enum class Kind { PressureLow, PressureHigh, TankWindow, Bounds, NonConvergence };
  Kind kind = Kind::PressureLow;
  std::size_t node = 0;
  double amount = 0.0;  // m, positive
};

struct DesignEvaluation {
  double cost = 0.0;
  CostBreakdown breakdown;
  FlowSolution flow;
  std::vector<Violation> violations;
  double max_violation = 0.0;   // m; infinite when the inner solve failed
  double total_violation = 0.0;  // m
  std::string diagnostic;

  bool feasible(double tolerance = 1e-3) const { return max_violation <= tolerance; }
};

/// Sets the tank geometry, solves the flow problem, and reports cost and
/// constraint violations. Inner non-convergence yields an infeasible
/// evaluation carrying the solver message.
DesignEvaluation evaluate_design(const Network& network, const LoopSet& loops, const DesignVariables& vars,
                                 const DesignBounds& bounds, const EconomicParams& econ, const WindParams& wind,
                                 const FoundationParams& foundation, const SolverOptions& solver = {});

struct DesignOptions {
  int starts = 32;
  int max_starts = 256;
  std::uint64_t seed = 1;
  /// Extra starting point evaluated first, usually the hand design.
  std::optional<DesignVariables> baseline;
  double feasibility_tolerance = 1e-3;  // m
  int max_escalations = 8;
  int evaluations_per_phase = 400;
  SolverOptions solver;
};

struct PressureMargin {
  std::size_t node = 0;
  double pressure = 0.0;
  double above_min = 0.0;  // p - p_min
  double below_max = 0.0;  // p_max - p
};

struct StartTrace {
  DesignVariables start;
  DesignVariables result;
  double best_cost = 0.0;  // best feasible cost reached from this start, infinite if none
  bool feasible = false;
  int evaluations = 0;
  /// Incumbent penalized objective after each local-search step, tagged with the penalty weight.
  std::vector<std::pair<double, double>> history;
};

struct DesignSolution {
  DesignVariables variables;
  Network network;
  FlowSolution flow;
  CostBreakdown cost;
  std::vector<PressureMargin> margins;
  std::vector<Violation> violations;
  std::vector<StartTrace> trace;
  bool feasible = false;
  double max_violation = 0.0;
  int evaluations = 0;
  std::string message;
};

/// Builds a DesignSolution from one evaluated design.
DesignSolution make_solution(const Network& network, const DesignVariables& vars, const DesignEvaluation& eval,
                             const DesignBounds& bounds, double tolerance = 1e-3);

/// Multi-start derivative-free minimization of total cost over tank depth
/// and elevation. Deterministic for a fixed seed.
DesignSolution solve_dom(const Network& network, const LoopSet& loops, const DesignBounds& bounds,
                         const EconomicParams& econ, const WindParams& wind, const FoundationParams& foundation,
                         const DesignOptions& options = {});

/// Fractional reduction (baseline - optimized) / baseline; positive means cheaper.
struct CostDeltas {
  double pipeline = 0.0;
  double tank_material = 0.0;
  double tank_foundation = 0.0;
  double pump_npv = 0.0;
  double total = 0.0;
  bool operator==(const CostDeltas&) const = default;
};

CostDeltas compare_designs(const DesignSolution& baseline, const DesignSolution& optimized);

}  // namespace wdn
