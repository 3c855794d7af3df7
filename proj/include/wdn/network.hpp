#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace wdn {

enum class HeadlossModel { HazenWilliams, DarcyWeisbach };
enum class NodeKind { Junction, Tank };

struct Fluid {
  double kinematic_viscosity = 1.0e-6;  // m^2/s
  double density = 1000.0;              // kg/m^3
  double gravity = 9.80665;             // m/s^2
  double specific_weight = 9810.0;      // N/m^3
  bool operator==(const Fluid&) const = default;
};

// ---------------------------------------------------------------------------
// Input records, in the units used by the .wdn format (L/s, mm).
// ---------------------------------------------------------------------------

struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::Junction;
  double elevation = 0.0;  // m
  double demand = 0.0;     // L/s, positive = withdrawal
  // Tanks only.
  double water_depth = 0.0;          // m
  double height_above_ground = 0.0;  // m
  std::optional<double> volume;      // m^3
  bool operator==(const NodeSpec&) const = default;
};

struct PipeSpec {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;     // m
  double diameter = 0.0;   // mm
  double roughness = 0.0;  // HW coefficient C, or DW rugosity in mm
  bool operator==(const PipeSpec&) const = default;
};

struct PumpSpec {
  std::string tank;
  double elevation = 0.0;       // m
  double supply_length = 0.0;   // m
  std::optional<double> supply_diameter;  // mm; sized from a catalog when absent
  std::optional<double> supply_roughness;  // C or mm; defaults to the tank's first pipe
  double daily_hours = 12.0;      // n_h, energy accounting
  double efficiency = 0.85;
  double operating_hours = 12.0;  // n_p, pumping flow rate
  std::optional<double> resistance;  // SI k_p; derived from the supply pipe when absent
  bool operator==(const PumpSpec&) const = default;
};

struct NetworkSpec {
  HeadlossModel model = HeadlossModel::HazenWilliams;
  Fluid fluid;
  double day_factor = 1.2;     // k1
  double hour_factor = 1.5;    // k2
  double operating_hours = 24.0;  // n_WDN
  std::vector<NodeSpec> nodes;
  std::vector<PipeSpec> pipes;
  std::vector<PumpSpec> pumps;
  bool operator==(const NetworkSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Validated network, SI units throughout.
// ---------------------------------------------------------------------------

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Junction;
  double elevation = 0.0;  // z, m
  double demand = 0.0;     // m^3/s
  double water_depth = 0.0;          // h_r, m
  double height_above_ground = 0.0;  // h_b, m
  std::optional<double> volume;      // V_r, m^3

  bool is_tank() const { return kind == NodeKind::Tank; }
  /// z + h_b + h_r. Meaningful for tanks only.
  double fixed_head() const { return elevation + height_above_ground + water_depth; }
  /// Ground elevation of the tank bottom, z_b = z + h_b.
  double base_elevation() const { return elevation + height_above_ground; }
};

struct Pipe {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 0.0;     // m
  double diameter = 0.0;   // m
  double roughness = 0.0;  // C (HW) or epsilon in m (DW)
};

struct Pump {
  std::size_t tank = 0;
  double elevation = 0.0;
  double supply_length = 0.0;
  std::optional<double> supply_diameter;  // m
  double supply_roughness = 0.0;  // C (HW) or epsilon in m (DW)
  double daily_hours = 12.0;
  double efficiency = 0.85;
  double operating_hours = 12.0;
  std::optional<double> resistance;
};

class Network {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Pipe>& pipes() const { return pipes_; }
  const std::vector<Pump>& pumps() const { return pumps_; }
  const Fluid& fluid() const { return fluid_; }
  HeadlossModel model() const { return model_; }
  double day_factor() const { return day_factor_; }
  double hour_factor() const { return hour_factor_; }
  double operating_hours() const { return operating_hours_; }

  /// Node indices of junctions, in declaration order (= F_d row order).
  const std::vector<std::size_t>& junctions() const { return junctions_; }
  /// Node indices of tanks, in declaration order.
  const std::vector<std::size_t>& tanks() const { return tanks_; }

  std::optional<std::size_t> find_node(const std::string& id) const;
  std::optional<std::size_t> find_pipe(const std::string& id) const;
  /// F_d row of a node, empty for tanks.
  std::optional<std::size_t> junction_row(std::size_t node) const { return junction_row_[node]; }

  /// Sum of junction demands, m^3/s.
  double total_demand() const;
  /// Pump serving a tank, if any.
  const Pump* pump_for(std::size_t tank) const;

  /// Copy with one tank's water depth and elevation above ground replaced.
  Network with_tank_geometry(std::size_t tank, double water_depth, double height_above_ground) const;

 private:
  friend Network build_network(const NetworkSpec& spec);

  std::vector<Node> nodes_;
  std::vector<Pipe> pipes_;
  std::vector<Pump> pumps_;
  Fluid fluid_;
  HeadlossModel model_ = HeadlossModel::HazenWilliams;
  double day_factor_ = 1.2;
  double hour_factor_ = 1.5;
  double operating_hours_ = 24.0;
  std::vector<std::size_t> junctions_;
  std::vector<std::size_t> tanks_;
  std::vector<std::optional<std::size_t>> junction_row_;
};

/// Validates a specification and converts it to SI. Throws ValidationError
/// naming the offending entity.
Network build_network(const NetworkSpec& spec);

/// Signed sparse incidence matrix, entries in {-1, 0, +1}.
using Incidence = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// F_d: one row per junction, -1 where a pipe leaves it, +1 where it enters.
Incidence junction_incidence(const Network& network);

struct LoopMember {
  std::size_t pipe = 0;
  int sign = 1;  // +1 when the pipe direction agrees with the loop direction
};

struct Loop {
  std::vector<LoopMember> members;
  /// Zero for closed loops; head(start tank) - head(end tank) for pseudo-loops.
  double fixed_head_difference = 0.0;
  bool pseudo = false;
  std::optional<std::size_t> start_tank;
  std::optional<std::size_t> end_tank;
};

struct LoopSet {
  std::vector<Loop> loops;
  Incidence junction_incidence;  // F_d
  Incidence loop_incidence;      // F_l
};

/// Spanning tree rooted at the lowest-id tank, edges taken in ascending pipe-id order.
struct SpanningTree {
  std::size_t root = 0;
  std::vector<bool> tree_pipe;                        // per pipe
  std::vector<std::optional<std::size_t>> parent_pipe;  // per node; empty at the root
  std::vector<std::size_t> order;                     // nodes, root first, parents before children
};

SpanningTree spanning_tree(const Network& network);

/// Fundamental cycles of the spanning tree plus one pseudo-loop per extra tank.
LoopSet cycle_basis(const Network& network);

/// A user loop is one F_l row: a sign per pipe, in pipe declaration order.
/// Shorter rows are padded with zeros.
using LoopRow = std::vector<int>;

/// Validates hand-entered loops (closed walks or tank-to-tank paths) and
/// checks independence and count against P - J.
LoopSet accept_explicit_loops(const Network& network, const std::vector<LoopRow>& rows);

/// Recomputes pseudo-loop head differences from the tank heads in `network`.
void refresh_fixed_heads(LoopSet& loops, const Network& network);

/// Orders identifiers numerically when both are integers, lexicographically otherwise.
bool id_less(const std::string& a, const std::string& b);

}  // namespace wdn
