#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wdn/commands.hpp"
#include "wdn/fixtures.hpp"
#include "wdn/io.hpp"
#include "wdn/network.hpp"

namespace test {

inline wdn::InputDocument case_doc(const char* text) { return wdn::parse_input(text); }

inline wdn::Network case_network(const char* text) { return wdn::build_network(case_doc(text).network); }

inline wdn::NodeSpec junction(const std::string& id, double z, double demand) {
  wdn::NodeSpec n;
  n.id = id;
  n.elevation = z;
  n.demand = demand;
  return n;
}

inline wdn::NodeSpec tank(const std::string& id, double z, double demand, double h_r, double h_b = 0.0) {
  wdn::NodeSpec n = junction(id, z, demand);
  n.kind = wdn::NodeKind::Tank;
  n.water_depth = h_r;
  n.height_above_ground = h_b;
  return n;
}

inline wdn::PipeSpec pipe(const std::string& id, const std::string& from, const std::string& to, double length = 100.0,
                          double diameter = 100.0, double roughness = 130.0) {
  return {id, from, to, length, diameter, roughness};
}

/// Headloss of a Hazen-Williams pipe written out in full, SI units.
inline double hw_headloss(double length, double c, double diameter, double flow) {
  return 10.67 * length / (std::pow(c, 1.85) * std::pow(diameter, 4.87)) * flow * std::pow(std::abs(flow), 0.85);
}

/// Friction factor from the explicit blended formula, written out term by term.
inline double friction_oracle(double re, double eps, double d) {
  const double laminar = std::pow(64.0 / re, 8.0);
  const double inner = std::log(eps / (3.7 * d) + 5.74 / std::pow(re, 0.9)) - 2500.0 / re;
  return std::pow(laminar + 9.5 * std::pow(inner, -16.0), 0.125);
}

inline double darcy_headloss(double length, double diameter, double eps, double nu, double g, double flow) {
  const double pi = 3.14159265358979323846;
  const double re = 4.0 * std::abs(flow) / (pi * diameter * nu);
  const double f = friction_oracle(re, eps, diameter);
  return 8.0 * f * length / (std::pow(diameter, 5.0) * pi * pi * g) * flow * std::abs(flow);
}

inline double flow_of(const wdn::Network& net, const wdn::FlowSolution& sol, const std::string& pipe_id) {
  return sol.flows[*net.find_pipe(pipe_id)];
}

}  // namespace test
