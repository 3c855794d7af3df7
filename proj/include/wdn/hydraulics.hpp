#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wdn/network.hpp"

namespace wdn {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHazenWilliamsExponent = 1.85;
inline constexpr double kDarcyWeisbachExponent = 2.0;

/// Reynolds number 4|Q|/(pi D nu).
double reynolds(double flow, double diameter, double viscosity);

/// Explicit friction factor valid across laminar, transitional and turbulent
/// regimes. Requires Re > 0.
double friction_factor(double reynolds_number, double rugosity, double diameter);

/// Hazen-Williams resistance 10.67 L / (C^1.85 D^4.87), SI.
double resistance_hw(double length, double coefficient, double diameter);

/// Darcy-Weisbach resistance 8 f L / (D^5 pi^2 g), SI.
double resistance_dw(double length, double diameter, double friction, double gravity = 9.80665);

/// k Q |Q|^(n-1).
double headloss(double resistance, double exponent, double flow);

/// d(headloss)/dQ with the derivative held at its |Q| = eps value inside the
/// band |Q| < eps, so it never vanishes.
double headloss_derivative(double resistance, double exponent, double flow, double flow_epsilon);

struct PipeHydraulics {
  double resistance = 0.0;  // k
  double exponent = 2.0;    // n
  double friction = 0.0;    // f (DW only)
  double reynolds = 0.0;
};

struct SolverOptions {
  double tol_mass = 1e-9;    // m^3/s
  double tol_energy = 1e-7;  // m
  int max_iterations = 200;
  double flow_epsilon = 1e-6;  // m^3/s
  double initial_flow_fraction = 0.10;
  double backtrack_factor = 0.5;
  int max_halvings = 30;
};

/// Resistance of one pipe at the given flow. For DW the friction factor is
/// evaluated at max(|Q|, flow_epsilon).
PipeHydraulics pipe_hydraulics(const Network& network, std::size_t pipe, double flow, double flow_epsilon = 1e-6);

/// Rows 0..J-1: F_d q - d (m^3/s). Rows J..P-1: F_l dh(q) - dh_fixed (m).
Eigen::VectorXd assemble_residuals(const Network& network, const LoopSet& loops, std::span<const double> flows,
                                   double flow_epsilon = 1e-6);

/// Residual Jacobian at `flows`, with each pipe's resistance frozen at its value for `flows`.
Eigen::MatrixXd assemble_jacobian(const Network& network, const LoopSet& loops, std::span<const double> flows,
                                  double flow_epsilon = 1e-6);

struct FlowSolution {
  std::vector<double> flows;      // m^3/s, sign relative to declared from -> to
  std::vector<double> heads;      // m
  std::vector<double> pressures;  // m H2O
  std::vector<double> tank_outflows;  // m^3/s, per node (zero for junctions)
  std::vector<PipeHydraulics> pipes;
  double mass_residual = 0.0;    // max |.|, m^3/s
  double energy_residual = 0.0;  // max |.|, m
  double path_discrepancy = 0.0;  // m
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Damped Newton on the square mass/energy system. Never throws on
/// non-convergence; inspect `converged` and `message`.
FlowSolution solve_wfp(const Network& network, const LoopSet& loops, const SolverOptions& options = {});

struct HeadField {
  std::vector<double> heads;
  std::vector<double> pressures;
  /// Largest disagreement between tree-propagated heads and any other path
  /// (non-tree pipes and fixed tank heads).
  double path_discrepancy = 0.0;
};

/// Heads from the root tank along the spanning tree; pressures h - z.
HeadField node_heads(const Network& network, std::span<const double> flows, double flow_epsilon = 1e-6);

/// Mean absolute error. Throws std::invalid_argument on length mismatch or empty input.
double mae(std::span<const double> modeled, std::span<const double> reference);

}  // namespace wdn
