#include "wdn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>

#include "wdn/error.hpp"

namespace wdn {

namespace {

constexpr double kDemandBalanceTolerance = 1e-9;  // m^3/s

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<std::size_t> pipes_by_id(const Network& network) {
  std::vector<std::size_t> order(network.pipes().size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return id_less(network.pipes()[a].id, network.pipes()[b].id);
  });
  return order;
}

// Signed pipe sequence along the tree from `from` up to the root.
// Signs are relative to walking root -> from.
std::vector<LoopMember> path_from_root(const Network& network, const SpanningTree& tree, std::size_t node) {
  std::vector<LoopMember> path;
  while (tree.parent_pipe[node]) {
    const std::size_t p = *tree.parent_pipe[node];
    const Pipe& pipe = network.pipes()[p];
    // Walking root -> node crosses this pipe towards `node`.
    path.push_back({p, pipe.to == node ? 1 : -1});
    node = pipe.to == node ? pipe.from : pipe.to;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

Incidence loop_matrix(const std::vector<Loop>& loops, std::size_t pipe_count) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t r = 0; r < loops.size(); ++r) {
    for (const LoopMember& m : loops[r].members) {
      entries.emplace_back(static_cast<int>(r), static_cast<int>(m.pipe), static_cast<double>(m.sign));
    }
  }
  Incidence fl(static_cast<Eigen::Index>(loops.size()), static_cast<Eigen::Index>(pipe_count));
  fl.setFromTriplets(entries.begin(), entries.end());
  return fl;
}

}  // namespace

bool id_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    const auto ta = a.find_first_not_of('0');
    const auto tb = b.find_first_not_of('0');
    const std::string na = ta == std::string::npos ? "0" : a.substr(ta);
    const std::string nb = tb == std::string::npos ? "0" : b.substr(tb);
    if (na.size() != nb.size()) return na.size() < nb.size();
    if (na != nb) return na < nb;
  }
  return a < b;
}

std::optional<std::size_t> Network::find_node(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Network::find_pipe(const std::string& id) const {
  for (std::size_t i = 0; i < pipes_.size(); ++i) {
    if (pipes_[i].id == id) return i;
  }
  return std::nullopt;
}

double Network::total_demand() const {
  double sum = 0.0;
  for (std::size_t j : junctions_) sum += nodes_[j].demand;
  return sum;
}

const Pump* Network::pump_for(std::size_t tank) const {
  for (const Pump& p : pumps_) {
    if (p.tank == tank) return &p;
  }
  return nullptr;
}

Network Network::with_tank_geometry(std::size_t tank, double water_depth, double height_above_ground) const {
  require(tank < nodes_.size() && nodes_[tank].is_tank(), "with_tank_geometry: node is not a tank");
  require(water_depth > 0.0, "tank '" + nodes_[tank].id + "': water depth must be positive");
  require(height_above_ground >= 0.0, "tank '" + nodes_[tank].id + "': height above ground must be nonnegative");
  Network copy = *this;
  copy.nodes_[tank].water_depth = water_depth;
  copy.nodes_[tank].height_above_ground = height_above_ground;
  return copy;
}

Network build_network(const NetworkSpec& spec) {
  Network net;
  net.model_ = spec.model;
  net.fluid_ = spec.fluid;
  net.day_factor_ = spec.day_factor;
  net.hour_factor_ = spec.hour_factor;
  net.operating_hours_ = spec.operating_hours;

  require(spec.fluid.kinematic_viscosity > 0.0, "kinematic viscosity must be positive");
  require(spec.fluid.gravity > 0.0, "gravity must be positive");
  require(spec.fluid.specific_weight > 0.0, "specific weight must be positive");
  require(spec.hour_factor > 0.0, "hour factor k2 must be positive");
  require(spec.day_factor > 0.0, "day factor k1 must be positive");
  require(spec.operating_hours > 0.0 && spec.operating_hours <= 24.0, "network operating hours must be in (0, 24]");

  std::unordered_map<std::string, std::size_t> node_index;
  for (const NodeSpec& n : spec.nodes) {
    require(!node_index.count(n.id), "duplicate node id '" + n.id + "'");
    require(std::isfinite(n.elevation), "node '" + n.id + "': elevation must be finite");
    require(std::isfinite(n.demand), "node '" + n.id + "': demand must be finite");
    Node node;
    node.id = n.id;
    node.kind = n.kind;
    node.elevation = n.elevation;
    node.demand = n.demand * 1e-3;
    if (n.kind == NodeKind::Tank) {
      require(n.water_depth > 0.0, "tank '" + n.id + "': water depth must be positive");
      require(n.height_above_ground >= 0.0, "tank '" + n.id + "': height above ground must be nonnegative");
      require(!n.volume || *n.volume > 0.0, "tank '" + n.id + "': volume must be positive");
      node.water_depth = n.water_depth;
      node.height_above_ground = n.height_above_ground;
      node.volume = n.volume;
    }
    node_index.emplace(n.id, net.nodes_.size());
    net.nodes_.push_back(std::move(node));
  }

  std::unordered_set<std::string> pipe_ids;
  for (const PipeSpec& p : spec.pipes) {
    require(pipe_ids.insert(p.id).second, "duplicate pipe id '" + p.id + "'");
    const auto from = node_index.find(p.from);
    const auto to = node_index.find(p.to);
    require(from != node_index.end(), "pipe '" + p.id + "': unknown start node '" + p.from + "'");
    require(to != node_index.end(), "pipe '" + p.id + "': unknown end node '" + p.to + "'");
    require(p.from != p.to, "pipe '" + p.id + "': start and end node are the same");
    require(p.length > 0.0, "pipe '" + p.id + "': length must be positive");
    require(p.diameter > 0.0, "pipe '" + p.id + "': diameter must be positive");
    if (spec.model == HeadlossModel::HazenWilliams) {
      require(p.roughness > 0.0, "pipe '" + p.id + "': Hazen-Williams coefficient must be positive");
    } else {
      require(p.roughness >= 0.0, "pipe '" + p.id + "': rugosity must be nonnegative");
    }
    Pipe pipe;
    pipe.id = p.id;
    pipe.from = from->second;
    pipe.to = to->second;
    pipe.length = p.length;
    pipe.diameter = p.diameter * 1e-3;
    pipe.roughness = spec.model == HeadlossModel::HazenWilliams ? p.roughness : p.roughness * 1e-3;
    net.pipes_.push_back(std::move(pipe));
  }

  net.junction_row_.assign(net.nodes_.size(), std::nullopt);
  for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
    if (net.nodes_[i].is_tank()) {
      net.tanks_.push_back(i);
    } else {
      net.junction_row_[i] = net.junctions_.size();
      net.junctions_.push_back(i);
    }
  }
  require(!net.tanks_.empty(), "network has no tank; heads are undetermined");

  for (const PumpSpec& p : spec.pumps) {
    const auto it = node_index.find(p.tank);
    require(it != node_index.end(), "pump: unknown tank '" + p.tank + "'");
    const Node& tank = net.nodes_[it->second];
    require(tank.is_tank(), "pump: node '" + p.tank + "' is not a tank");
    require(net.pump_for(it->second) == nullptr, "pump: tank '" + p.tank + "' already has a pump");
    require(p.efficiency > 0.0 && p.efficiency <= 1.0, "pump for '" + p.tank + "': efficiency must be in (0, 1]");
    require(p.operating_hours > 0.0 && p.operating_hours <= 24.0,
            "pump for '" + p.tank + "': operating hours must be in (0, 24]");
    require(p.daily_hours >= 0.0 && p.daily_hours <= 24.0, "pump for '" + p.tank + "': daily hours must be in [0, 24]");
    require(p.elevation < tank.base_elevation(), "pump for '" + p.tank + "': must sit below the tank base");
    require(p.supply_length > 0.0, "pump for '" + p.tank + "': supply pipe length must be positive");
    require(!p.supply_diameter || *p.supply_diameter > 0.0,
            "pump for '" + p.tank + "': supply pipe diameter must be positive");
    require(!p.resistance || *p.resistance >= 0.0, "pump for '" + p.tank + "': resistance must be nonnegative");
    Pump pump;
    pump.tank = it->second;
    pump.elevation = p.elevation;
    pump.supply_length = p.supply_length;
    if (p.supply_diameter) pump.supply_diameter = *p.supply_diameter * 1e-3;
    pump.daily_hours = p.daily_hours;
    pump.efficiency = p.efficiency;
    pump.operating_hours = p.operating_hours;
    pump.resistance = p.resistance;
    if (p.supply_roughness) {
      require(spec.model == HeadlossModel::HazenWilliams ? *p.supply_roughness > 0.0 : *p.supply_roughness >= 0.0,
              "pump for '" + p.tank + "': invalid supply pipe roughness");
      pump.supply_roughness = spec.model == HeadlossModel::HazenWilliams ? *p.supply_roughness : *p.supply_roughness * 1e-3;
    } else {
      for (const Pipe& pipe : net.pipes_) {
        if (pipe.from == it->second || pipe.to == it->second) {
          pump.supply_roughness = pipe.roughness;
          break;
        }
      }
    }
    net.pumps_.push_back(pump);
  }

  DisjointSets components(net.nodes_.size());
  for (const Pipe& p : net.pipes_) components.unite(p.from, p.to);
  for (std::size_t i = 1; i < net.nodes_.size(); ++i) {
    require(components.find(i) == components.find(0),
            "node '" + net.nodes_[i].id + "' is disconnected from node '" + net.nodes_[0].id + "'");
  }

  double balance = 0.0;
  for (const Node& n : net.nodes_) balance += n.demand;
  require(std::abs(balance) <= kDemandBalanceTolerance,
          "unbalanced demand: sum over all nodes is " + std::to_string(balance * 1e3) + " L/s");

  return net;
}

Incidence junction_incidence(const Network& network) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t j = 0; j < network.pipes().size(); ++j) {
    const Pipe& p = network.pipes()[j];
    if (auto r = network.junction_row(p.from)) entries.emplace_back(static_cast<int>(*r), static_cast<int>(j), -1.0);
    if (auto r = network.junction_row(p.to)) entries.emplace_back(static_cast<int>(*r), static_cast<int>(j), 1.0);
  }
  Incidence fd(static_cast<Eigen::Index>(network.junctions().size()),
               static_cast<Eigen::Index>(network.pipes().size()));
  fd.setFromTriplets(entries.begin(), entries.end());
  return fd;
}

SpanningTree spanning_tree(const Network& network) {
  const std::size_t n = network.nodes().size();
  SpanningTree tree;
  tree.tree_pipe.assign(network.pipes().size(), false);
  tree.parent_pipe.assign(n, std::nullopt);

  tree.root = *std::min_element(network.tanks().begin(), network.tanks().end(), [&](std::size_t a, std::size_t b) {
    return id_less(network.nodes()[a].id, network.nodes()[b].id);
  });

  const std::vector<std::size_t> order = pipes_by_id(network);
  DisjointSets sets(n);
  std::vector<std::vector<std::size_t>> adjacent(n);
  for (std::size_t p : order) {
    const Pipe& pipe = network.pipes()[p];
    if (sets.unite(pipe.from, pipe.to)) {
      tree.tree_pipe[p] = true;
      adjacent[pipe.from].push_back(p);
      adjacent[pipe.to].push_back(p);
    }
  }

  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(tree.root);
  seen[tree.root] = true;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    tree.order.push_back(u);
    for (std::size_t p : adjacent[u]) {
      const Pipe& pipe = network.pipes()[p];
      const std::size_t v = pipe.from == u ? pipe.to : pipe.from;
      if (seen[v]) continue;
      seen[v] = true;
      tree.parent_pipe[v] = p;
      frontier.push(v);
    }
  }
  return tree;
}

LoopSet cycle_basis(const Network& network) {
  const SpanningTree tree = spanning_tree(network);
  LoopSet set;
  set.junction_incidence = junction_incidence(network);

  for (std::size_t p : pipes_by_id(network)) {
    if (tree.tree_pipe[p]) continue;
    const Pipe& pipe = network.pipes()[p];
    // Loop direction follows the defining pipe: from -> to, then back along
    // the tree to `from`. Shared prefixes of the two root paths cancel.
    std::vector<LoopMember> to_path = path_from_root(network, tree, pipe.to);
    std::vector<LoopMember> from_path = path_from_root(network, tree, pipe.from);
    std::size_t common = 0;
    while (common < to_path.size() && common < from_path.size() && to_path[common].pipe == from_path[common].pipe) {
      ++common;
    }
    Loop loop;
    loop.members.push_back({p, 1});
    // to -> lca: reverse of the root->to path beyond the common prefix.
    for (std::size_t i = to_path.size(); i-- > common;) loop.members.push_back({to_path[i].pipe, -to_path[i].sign});
    // lca -> from.
    for (std::size_t i = common; i < from_path.size(); ++i) loop.members.push_back(from_path[i]);
    set.loops.push_back(std::move(loop));
  }

  std::vector<std::size_t> others;
  for (std::size_t t : network.tanks()) {
    if (t != tree.root) others.push_back(t);
  }
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return id_less(network.nodes()[a].id, network.nodes()[b].id);
  });
  for (std::size_t t : others) {
    Loop loop;
    loop.pseudo = true;
    loop.start_tank = tree.root;
    loop.end_tank = t;
    loop.members = path_from_root(network, tree, t);
    set.loops.push_back(std::move(loop));
  }

  refresh_fixed_heads(set, network);
  set.loop_incidence = loop_matrix(set.loops, network.pipes().size());
  return set;
}

LoopSet accept_explicit_loops(const Network& network, const std::vector<LoopRow>& rows) {
  const std::size_t pipe_count = network.pipes().size();
  const std::size_t expected = pipe_count - network.junctions().size();

  LoopSet set;
  set.junction_incidence = junction_incidence(network);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const LoopRow& row = rows[r];
    const std::string label = "loop " + std::to_string(r + 1);
    if (row.size() > pipe_count) {
      throw ValidationError(label + ": " + std::to_string(row.size()) + " entries for " +
                            std::to_string(pipe_count) + " pipes");
    }
    Loop loop;
    // Net signed degree per node: +1 where the walk leaves, -1 where it arrives.
    std::vector<int> degree(network.nodes().size(), 0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] == 0) continue;
      if (row[j] != 1 && row[j] != -1) throw ValidationError(label + ": entries must be -1, 0 or +1");
      loop.members.push_back({j, row[j]});
      const Pipe& pipe = network.pipes()[j];
      degree[pipe.from] += row[j];
      degree[pipe.to] -= row[j];
    }
    if (loop.members.empty()) throw ValidationError(label + ": open walk (no pipes)");

    std::vector<std::size_t> unbalanced;
    for (std::size_t i = 0; i < degree.size(); ++i) {
      if (degree[i] != 0) unbalanced.push_back(i);
    }
    if (!unbalanced.empty()) {
      const bool tank_path = unbalanced.size() == 2 && network.nodes()[unbalanced[0]].is_tank() &&
                             network.nodes()[unbalanced[1]].is_tank() && std::abs(degree[unbalanced[0]]) == 1 &&
                             std::abs(degree[unbalanced[1]]) == 1;
      if (!tank_path) {
        throw ValidationError(label + ": open walk at node '" + network.nodes()[unbalanced[0]].id + "'");
      }
      loop.pseudo = true;
      loop.start_tank = degree[unbalanced[0]] > 0 ? unbalanced[0] : unbalanced[1];
      loop.end_tank = degree[unbalanced[0]] > 0 ? unbalanced[1] : unbalanced[0];
    }
    set.loops.push_back(std::move(loop));
  }

  if (set.loops.size() != expected) {
    throw ValidationError("wrong loop count: " + std::to_string(set.loops.size()) + " given, " +
                          std::to_string(expected) + " required (pipes - junctions)");
  }

  set.loop_incidence = loop_matrix(set.loops, pipe_count);
  if (!set.loops.empty()) {
    const Eigen::MatrixXd dense(set.loop_incidence);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
    if (static_cast<std::size_t>(lu.rank()) < set.loops.size()) {
      throw ValidationError("rank deficiency: loops are linearly dependent (rank " + std::to_string(lu.rank()) +
                            " of " + std::to_string(set.loops.size()) + ")");
    }
  }
  refresh_fixed_heads(set, network);
  return set;
}

void refresh_fixed_heads(LoopSet& loops, const Network& network) {
  for (Loop& loop : loops.loops) {
    if (loop.pseudo && loop.start_tank && loop.end_tank) {
      loop.fixed_head_difference =
          network.nodes()[*loop.start_tank].fixed_head() - network.nodes()[*loop.end_tank].fixed_head();
    } else {
      loop.fixed_head_difference = 0.0;
    }
  }
}

}  // namespace wdn
