#include "wdn/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "wdn/error.hpp"

namespace wdn {

double reynolds(double flow, double diameter, double viscosity) {
  return 4.0 * std::abs(flow) / (kPi * diameter * viscosity);
}

double friction_factor(double reynolds_number, double rugosity, double diameter) {
  const double re = reynolds_number;
  const double laminar = std::pow(64.0 / re, 8.0);
  const double bracket = std::log(rugosity / (3.7 * diameter) + 5.74 / std::pow(re, 0.9)) - 2500.0 / re;
  return std::pow(laminar + 9.5 * std::pow(bracket, -16.0), 0.125);
}

double resistance_hw(double length, double coefficient, double diameter) {
  return 10.67 * length / (std::pow(coefficient, kHazenWilliamsExponent) * std::pow(diameter, 4.87));
}

double resistance_dw(double length, double diameter, double friction, double gravity) {
  return 8.0 * friction * length / (std::pow(diameter, 5.0) * kPi * kPi * gravity);
}

double headloss(double resistance, double exponent, double flow) {
  return resistance * flow * std::pow(std::abs(flow), exponent - 1.0);
}

double headloss_derivative(double resistance, double exponent, double flow, double flow_epsilon) {
  const double magnitude = std::max(std::abs(flow), flow_epsilon);
  return exponent * resistance * std::pow(magnitude, exponent - 1.0);
}

PipeHydraulics pipe_hydraulics(const Network& network, std::size_t pipe, double flow, double flow_epsilon) {
  const Pipe& p = network.pipes()[pipe];
  PipeHydraulics h;
  h.reynolds = reynolds(flow, p.diameter, network.fluid().kinematic_viscosity);
  if (network.model() == HeadlossModel::HazenWilliams) {
    h.exponent = kHazenWilliamsExponent;
    h.resistance = resistance_hw(p.length, p.roughness, p.diameter);
  } else {
    h.exponent = kDarcyWeisbachExponent;
    const double re = reynolds(std::max(std::abs(flow), flow_epsilon), p.diameter, network.fluid().kinematic_viscosity);
    h.friction = friction_factor(re, p.roughness, p.diameter);
    h.resistance = resistance_dw(p.length, p.diameter, h.friction, network.fluid().gravity);
  }
  return h;
}

Eigen::VectorXd assemble_residuals(const Network& network, const LoopSet& loops, std::span<const double> flows,
                                   double flow_epsilon) {
  const std::size_t pipe_count = network.pipes().size();
  if (flows.size() != pipe_count) throw std::invalid_argument("assemble_residuals: one flow per pipe required");
  const std::size_t junctions = network.junctions().size();

  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(junctions + loops.loops.size()));
  for (std::size_t row = 0; row < junctions; ++row) r[static_cast<Eigen::Index>(row)] = -network.nodes()[network.junctions()[row]].demand;
  for (std::size_t j = 0; j < pipe_count; ++j) {
    const Pipe& p = network.pipes()[j];
    if (auto row = network.junction_row(p.from)) r[static_cast<Eigen::Index>(*row)] -= flows[j];
    if (auto row = network.junction_row(p.to)) r[static_cast<Eigen::Index>(*row)] += flows[j];
  }

  std::vector<double> drop(pipe_count);
  for (std::size_t j = 0; j < pipe_count; ++j) {
    const PipeHydraulics h = pipe_hydraulics(network, j, flows[j], flow_epsilon);
    drop[j] = headloss(h.resistance, h.exponent, flows[j]);
  }
  for (std::size_t l = 0; l < loops.loops.size(); ++l) {
    double sum = -loops.loops[l].fixed_head_difference;
    for (const LoopMember& m : loops.loops[l].members) sum += m.sign * drop[m.pipe];
    r[static_cast<Eigen::Index>(junctions + l)] = sum;
  }
  return r;
}

Eigen::MatrixXd assemble_jacobian(const Network& network, const LoopSet& loops, std::span<const double> flows,
                                  double flow_epsilon) {
  const std::size_t pipe_count = network.pipes().size();
  const std::size_t junctions = network.junctions().size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(junctions + loops.loops.size()),
                                              static_cast<Eigen::Index>(pipe_count));
  for (std::size_t j = 0; j < pipe_count; ++j) {
    const Pipe& p = network.pipes()[j];
    const auto col = static_cast<Eigen::Index>(j);
    if (auto row = network.junction_row(p.from)) jac(static_cast<Eigen::Index>(*row), col) -= 1.0;
    if (auto row = network.junction_row(p.to)) jac(static_cast<Eigen::Index>(*row), col) += 1.0;
  }
  std::vector<double> slope(pipe_count);
  for (std::size_t j = 0; j < pipe_count; ++j) {
    const PipeHydraulics h = pipe_hydraulics(network, j, flows[j], flow_epsilon);
    slope[j] = headloss_derivative(h.resistance, h.exponent, flows[j], flow_epsilon);
  }
  for (std::size_t l = 0; l < loops.loops.size(); ++l) {
    for (const LoopMember& m : loops.loops[l].members) {
      jac(static_cast<Eigen::Index>(junctions + l), static_cast<Eigen::Index>(m.pipe)) += m.sign * slope[m.pipe];
    }
  }
  return jac;
}

namespace {

struct ResidualNorms {
  double mass = 0.0;
  double energy = 0.0;
  double two_norm = 0.0;
};

ResidualNorms norms(const Eigen::VectorXd& r, std::size_t junctions) {
  ResidualNorms n;
  const auto j = static_cast<Eigen::Index>(junctions);
  if (j > 0) n.mass = r.head(j).cwiseAbs().maxCoeff();
  if (r.size() > j) n.energy = r.tail(r.size() - j).cwiseAbs().maxCoeff();
  n.two_norm = r.norm();
  return n;
}

}  // namespace

FlowSolution solve_wfp(const Network& network, const LoopSet& loops, const SolverOptions& options) {
  const std::size_t pipe_count = network.pipes().size();
  const std::size_t junctions = network.junctions().size();
  if (junctions + loops.loops.size() != pipe_count) {
    throw ValidationError("residual system is not square: " + std::to_string(junctions) + " junctions + " +
                          std::to_string(loops.loops.size()) + " loops for " + std::to_string(pipe_count) + " pipes");
  }

  FlowSolution sol;
  double seed = options.initial_flow_fraction * network.total_demand();
  if (!(seed > 0.0)) seed = 1e-3;
  Eigen::VectorXd q = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pipe_count), seed);

  auto residual_at = [&](const Eigen::VectorXd& flows) {
    return assemble_residuals(network, loops, std::span<const double>(flows.data(), pipe_count), options.flow_epsilon);
  };

  Eigen::VectorXd r = residual_at(q);
  ResidualNorms current = norms(r, junctions);
  Eigen::VectorXd best_q = q;
  ResidualNorms best = current;

  for (int iter = 0;; ++iter) {
    sol.iterations = iter;
    if (current.mass <= options.tol_mass && current.energy <= options.tol_energy) {
      sol.converged = true;
      best_q = q;
      best = current;
      break;
    }
    if (iter >= options.max_iterations) {
      sol.message = "no convergence after " + std::to_string(options.max_iterations) + " iterations";
      break;
    }

    const Eigen::MatrixXd jac = assemble_jacobian(network, loops, std::span<const double>(q.data(), pipe_count),
                                                  options.flow_epsilon);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      std::string suspects;
      for (std::size_t j = 0; j < pipe_count; ++j) {
        if (pipe_hydraulics(network, j, q[static_cast<Eigen::Index>(j)], options.flow_epsilon).resistance == 0.0) {
          suspects += (suspects.empty() ? "" : ", ") + network.pipes()[j].id;
        }
      }
      sol.message = "singular Jacobian";
      if (!suspects.empty()) sol.message += "; pipes with zero resistance: " + suspects;
      break;
    }
    const Eigen::VectorXd step = lu.solve(-r);

    double alpha = 1.0;
    Eigen::VectorXd trial = q + step;
    Eigen::VectorXd trial_r = residual_at(trial);
    for (int h = 0; h < options.max_halvings && !(trial_r.norm() < current.two_norm); ++h) {
      alpha *= options.backtrack_factor;
      trial = q + alpha * step;
      trial_r = residual_at(trial);
    }
    q = std::move(trial);
    r = std::move(trial_r);
    current = norms(r, junctions);
    if (current.two_norm < best.two_norm) {
      best_q = q;
      best = current;
    }
  }

  sol.flows.assign(best_q.data(), best_q.data() + pipe_count);
  sol.mass_residual = best.mass;
  sol.energy_residual = best.energy;

  sol.pipes.reserve(pipe_count);
  for (std::size_t j = 0; j < pipe_count; ++j) sol.pipes.push_back(pipe_hydraulics(network, j, sol.flows[j], options.flow_epsilon));

  const HeadField field = node_heads(network, sol.flows, options.flow_epsilon);
  sol.heads = field.heads;
  sol.pressures = field.pressures;
  sol.path_discrepancy = field.path_discrepancy;

  sol.tank_outflows.assign(network.nodes().size(), 0.0);
  for (std::size_t j = 0; j < pipe_count; ++j) {
    const Pipe& p = network.pipes()[j];
    if (network.nodes()[p.from].is_tank()) sol.tank_outflows[p.from] += sol.flows[j];
    if (network.nodes()[p.to].is_tank()) sol.tank_outflows[p.to] -= sol.flows[j];
  }
  if (sol.converged) sol.message = "converged in " + std::to_string(sol.iterations) + " iterations";
  return sol;
}

HeadField node_heads(const Network& network, std::span<const double> flows, double flow_epsilon) {
  const SpanningTree tree = spanning_tree(network);
  const std::size_t n = network.nodes().size();
  HeadField field;
  field.heads.assign(n, 0.0);

  std::vector<double> drop(network.pipes().size());
  for (std::size_t j = 0; j < drop.size(); ++j) {
    const PipeHydraulics h = pipe_hydraulics(network, j, flows[j], flow_epsilon);
    drop[j] = headloss(h.resistance, h.exponent, flows[j]);
  }

  field.heads[tree.root] = network.nodes()[tree.root].fixed_head();
  for (std::size_t node : tree.order) {
    if (!tree.parent_pipe[node]) continue;
    const std::size_t p = *tree.parent_pipe[node];
    const Pipe& pipe = network.pipes()[p];
    field.heads[node] = pipe.to == node ? field.heads[pipe.from] - drop[p] : field.heads[pipe.to] + drop[p];
  }

  for (std::size_t j = 0; j < drop.size(); ++j) {
    if (tree.tree_pipe[j]) continue;
    const Pipe& pipe = network.pipes()[j];
    field.path_discrepancy =
        std::max(field.path_discrepancy, std::abs(field.heads[pipe.from] - field.heads[pipe.to] - drop[j]));
  }
  for (std::size_t t : network.tanks()) {
    const double fixed = network.nodes()[t].fixed_head();
    field.path_discrepancy = std::max(field.path_discrepancy, std::abs(field.heads[t] - fixed));
    field.heads[t] = fixed;
  }

  field.pressures.resize(n);
  for (std::size_t i = 0; i < n; ++i) field.pressures[i] = field.heads[i] - network.nodes()[i].elevation;
  return field;
}

double mae(std::span<const double> modeled, std::span<const double> reference) {
  if (modeled.size() != reference.size()) {
    throw std::invalid_argument("mae: series lengths differ (" + std::to_string(modeled.size()) + " vs " +
                                std::to_string(reference.size()) + ")");
  }
  if (modeled.empty()) throw std::invalid_argument("mae: empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < modeled.size(); ++i) sum += std::abs(modeled[i] - reference[i]);
  return sum / static_cast<double>(modeled.size());
}

}  // namespace wdn
