#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wdn/costing.hpp"
#include "wdn/design.hpp"
#include "wdn/hydraulics.hpp"
#include "wdn/network.hpp"

namespace wdn {

/// A loop as written in a LOOPS line: pipe ids with a sign each.
using SignedPipes = std::vector<std::pair<std::string, int>>;

/// Expected values keyed by series name, then by pipe or node id, in file order.
using ReferenceSeries = std::vector<std::pair<std::string, double>>;

struct DesignSettings {
  DesignBounds bounds;
  int starts = 32;
  int max_starts = 256;
  std::uint64_t seed = 1;
  bool baseline = true;  // the file's tank geometry is a start and the comparison point
  double tolerance = 1e-3;
  bool operator==(const DesignSettings&) const = default;
};

struct InputDocument {
  NetworkSpec network;
  std::optional<EconomicParams> economics;
  std::optional<WindParams> wind;
  std::optional<FoundationParams> foundation;
  std::optional<DesignSettings> design;
  std::vector<SignedPipes> loops;
  std::map<std::string, ReferenceSeries> reference_flows;      // L/s
  std::map<std::string, ReferenceSeries> reference_pressures;  // m
  // Accepted for compatibility with spreadsheet inputs; used by no computation.
  std::optional<double> operational_cost_rate;
  std::optional<double> fill_duration;
  std::vector<std::string> warnings;

  /// Structural equality; warnings are ignored.
  bool operator==(const InputDocument& other) const;
};

/// Parses the sectioned .wdn text. Throws ParseError with line and column.
InputDocument parse_input(const std::string& text);

/// Reads and parses a file. A missing file is a ParseError.
InputDocument read_input(const std::string& path);

/// Canonical text form; parse_input(render_input(d)) reproduces d.
std::string render_input(const InputDocument& doc);

/// Explicit loops as F_l rows over the network's pipe order.
std::vector<LoopRow> loop_rows(const InputDocument& doc, const Network& network);

/// Economic, wind and foundation parameters with defaults for absent sections.
EconomicParams economics_or_default(const InputDocument& doc);
WindParams wind_or_default(const InputDocument& doc);
FoundationParams foundation_or_default(const InputDocument& doc);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct PipeRow {
  std::string id;
  double flow = 0.0;      // L/s
  double velocity = 0.0;  // m/s
  double headloss = 0.0;  // m
  double reynolds = 0.0;
  double friction = 0.0;  // DW only
  bool operator==(const PipeRow&) const = default;
};

struct NodeRow {
  std::string id;
  bool tank = false;
  double head = 0.0;      // m
  double pressure = 0.0;  // m H2O
  bool operator==(const NodeRow&) const = default;
};

struct MaeRow {
  std::string quantity;  // "flow" or "pressure"
  std::string series;
  double mae = 0.0;
  double max_abs = 0.0;
  std::size_t count = 0;
  bool operator==(const MaeRow&) const = default;
};

struct TankRow {
  std::string id;
  double water_depth = 0.0;
  double height_above_ground = 0.0;
  double volume = 0.0;
  double diameter = 0.0;
  double moment = 0.0;  // kN m
  double force = 0.0;   // kN
  double material = 0.0;
  double foundation = 0.0;
  bool operator==(const TankRow&) const = default;
};

struct PumpRow {
  std::string tank;
  double flow = 0.0;             // L/s
  double supply_diameter = 0.0;  // mm
  double resistance = 0.0;
  double geometric_head = 0.0;
  double total_head = 0.0;
  double power = 0.0;       // kW
  double energy = 0.0;      // kWh/day
  double daily_cost = 0.0;  // USD/day
  double npv = 0.0;         // USD
  bool operator==(const PumpRow&) const = default;
};

struct CostRow {
  double pipeline = 0.0;
  double tank_material = 0.0;
  double tank_foundation = 0.0;
  double pump_npv = 0.0;
  double total = 0.0;
  double npv_factor = 0.0;
  double wind_coefficient = 0.0;
  std::vector<TankRow> tanks;
  std::vector<PumpRow> pumps;
  bool operator==(const CostRow&) const = default;
};

struct DesignRow {
  bool feasible = false;
  double max_violation = 0.0;
  int starts = 0;
  int evaluations = 0;
  std::optional<double> baseline_total;
  std::optional<CostDeltas> deltas;  // fractions
  std::string message;
  bool operator==(const DesignRow&) const;
};

struct Report {
  std::string command;
  std::string model;
  bool converged = false;
  int iterations = 0;
  double mass_residual = 0.0;
  double energy_residual = 0.0;
  double path_discrepancy = 0.0;
  std::vector<PipeRow> pipes;
  std::vector<NodeRow> nodes;
  std::vector<MaeRow> mae;
  std::optional<CostRow> cost;
  std::optional<DesignRow> design;
  std::vector<std::string> warnings;
  bool operator==(const Report&) const = default;
};

Report make_report(const std::string& command, const Network& network, const FlowSolution& solution);
CostRow make_cost_row(const Network& network, const CostBreakdown& cost);
/// MAE of the solution against every reference series of the document.
std::vector<MaeRow> reference_errors(const InputDocument& doc, const Network& network, const FlowSolution& solution);

nlohmann::ordered_json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

/// Fixed-width human-readable tables.
std::string render_table(const Report& report);

}  // namespace wdn
