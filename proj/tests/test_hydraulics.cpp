#include <doctest.h>

#include <functional>
#include <random>
#include <set>

#include "support.hpp"
#include "wdn/error.hpp"
#include "wdn/hydraulics.hpp"

using namespace wdn;

namespace {

struct Solved {
  Network net;
  LoopSet loops;
  FlowSolution sol;
};

Solved solve_case(const char* text) {
  Solved s{test::case_network(text), {}, {}};
  s.loops = cycle_basis(s.net);
  s.sol = solve_wfp(s.net, s.loops);
  return s;
}

// Signed headloss of every pipe, from the test oracles.
std::vector<double> oracle_headlosses(const Network& net, const std::vector<double>& q) {
  std::vector<double> dh(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Pipe& p = net.pipes()[j];
    dh[j] = net.model() == HeadlossModel::HazenWilliams
                ? test::hw_headloss(p.length, p.roughness, p.diameter, q[j])
                : test::darcy_headloss(p.length, p.diameter, p.roughness, net.fluid().kinematic_viscosity,
                                       net.fluid().gravity, q[j]);
  }
  return dh;
}

// Every simple cycle of the undirected pipe graph, as signed pipe lists.
std::vector<std::vector<std::pair<std::size_t, int>>> simple_cycles(const Network& net, std::size_t limit) {
  std::vector<std::vector<std::pair<std::size_t, int>>> cycles;
  const std::size_t n = net.nodes().size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t j = 0; j < net.pipes().size(); ++j) {
    adj[net.pipes()[j].from].push_back(j);
    adj[net.pipes()[j].to].push_back(j);
  }
  std::set<std::set<std::size_t>> seen;
  for (std::size_t start = 0; start < n && cycles.size() < limit; ++start) {
    std::vector<bool> on_path(n, false);
    std::vector<std::pair<std::size_t, int>> path;
    std::function<void(std::size_t)> walk = [&](std::size_t u) {
      if (cycles.size() >= limit) return;
      on_path[u] = true;
      for (std::size_t j : adj[u]) {
        const Pipe& p = net.pipes()[j];
        const std::size_t v = p.from == u ? p.to : p.from;
        const int sign = p.from == u ? 1 : -1;
        if (!path.empty() && path.back().first == j) continue;
        if (v == start && path.size() >= 2) {
          auto cycle = path;
          cycle.emplace_back(j, sign);
          std::set<std::size_t> key;
          for (auto& [pipe, s] : cycle) key.insert(pipe);
          if (seen.insert(key).second) cycles.push_back(cycle);
        } else if (v > start && !on_path[v]) {
          path.emplace_back(j, sign);
          walk(v);
          path.pop_back();
        }
      }
      on_path[u] = false;
    };
    walk(start);
  }
  return cycles;
}

}  // namespace

TEST_CASE("Hazen-Williams resistance of the 40 mm benchmark pipe") {
  CHECK(resistance_hw(100, 130, 0.04) == doctest::Approx(842048.4).epsilon(1e-3));
  CHECK(resistance_hw(250, 100, 0.2) ==
        doctest::Approx(10.67 * 250 / (std::pow(100.0, 1.85) * std::pow(0.2, 4.87))).epsilon(1e-12));
}

TEST_CASE("friction factor matches the blended formula") {
  for (double re : {500.0, 1800.0, 3000.0, 1e4, 1e5, 1e7}) {
    for (double eps : {0.0, 1.5e-6, 2.6e-4}) {
      CAPTURE(re);
      CAPTURE(eps);
      CHECK(friction_factor(re, eps, 0.2) == doctest::Approx(test::friction_oracle(re, eps, 0.2)).epsilon(1e-12));
    }
  }
  CHECK(friction_factor(400, 0.0, 0.1) == doctest::Approx(64.0 / 400).epsilon(1e-3));
  CHECK(friction_factor(1e5, 2.6e-4, 0.2) > friction_factor(1e5, 1.5e-6, 0.2));
}

TEST_CASE("Darcy-Weisbach resistance") {
  const double f = 0.02;
  const double expected = 8 * f * 500 / (std::pow(0.2, 5) * kPi * kPi * 9.81);
  CHECK(resistance_dw(500, 0.2, f, 9.81) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("headloss is odd in the flow and its derivative is consistent") {
  for (double n : {kHazenWilliamsExponent, kDarcyWeisbachExponent}) {
    for (double q : {1e-4, 3e-3, 0.05}) {
      CHECK(headloss(1000, n, -q) == doctest::Approx(-headloss(1000, n, q)));
      const double h = q * 1e-5;
      const double fd = (headloss(1000, n, q + h) - headloss(1000, n, q - h)) / (2 * h);
      CHECK(headloss_derivative(1000, n, q, 1e-6) == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK(headloss_derivative(1000, n, 0.0, 1e-6) > 0.0);
    CHECK(headloss(1000, n, 0.0) == 0.0);
  }
}

TEST_CASE("zero flow with zero demand leaves a zero residual") {
  NetworkSpec s;
  s.nodes = {test::tank("T", 0, 0, 5), test::junction("1", 0, 0), test::junction("2", 0, 0)};
  s.pipes = {test::pipe("a", "T", "1"), test::pipe("b", "1", "2"), test::pipe("c", "2", "T")};
  const Network net = build_network(s);
  const LoopSet loops = cycle_basis(net);
  const std::vector<double> q(3, 0.0);
  CHECK(assemble_residuals(net, loops, q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("published flows nearly satisfy the residuals of the town network") {
  const InputDocument doc = test::case_doc(case_b_text);
  const Network net = build_network(doc.network);
  const LoopSet loops = cycle_basis(net);
  std::vector<double> q;
  for (const auto& [id, value] : doc.reference_flows.at("Q_m")) q.push_back(value * 1e-3);
  const Eigen::VectorXd r = assemble_residuals(net, loops, q);
  const auto j = static_cast<Eigen::Index>(net.junctions().size());
  CHECK(r.head(j).cwiseAbs().maxCoeff() < 2e-5);
  CHECK(r.tail(r.size() - j).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("Jacobian agrees with finite differences of frozen-resistance residuals") {
  for (const char* text : {case_a_text, case_b_text, case_c_text}) {
    const Network net = test::case_network(text);
    const LoopSet loops = cycle_basis(net);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-0.02, 0.02);
    std::vector<double> q(net.pipes().size());
    for (double& v : q) v = dist(rng);
    const Eigen::MatrixXd jac = assemble_jacobian(net, loops, q);

    // Residual with each resistance frozen at its value for q.
    std::vector<PipeHydraulics> frozen;
    for (std::size_t j = 0; j < q.size(); ++j) frozen.push_back(pipe_hydraulics(net, j, q[j]));
    auto residual = [&](const std::vector<double>& x) {
      Eigen::VectorXd r = assemble_residuals(net, loops, x);
      const auto rows = static_cast<Eigen::Index>(net.junctions().size());
      for (std::size_t l = 0; l < loops.loops.size(); ++l) {
        double sum = -loops.loops[l].fixed_head_difference;
        for (const LoopMember& m : loops.loops[l].members) {
          sum += m.sign * headloss(frozen[m.pipe].resistance, frozen[m.pipe].exponent, x[m.pipe]);
        }
        r(rows + static_cast<Eigen::Index>(l)) = sum;
      }
      return r;
    };
    Eigen::MatrixXd fd(jac.rows(), jac.cols());
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double h = std::max(1e-7, std::abs(q[j]) * 1e-6);
      auto plus = q, minus = q;
      plus[j] += h;
      minus[j] -= h;
      fd.col(static_cast<Eigen::Index>(j)) = (residual(plus) - residual(minus)) / (2 * h);
    }
    CHECK((jac - fd).cwiseAbs().maxCoeff() <= 1e-4 * fd.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("two-loop rural network solves to the expected state") {
  const Solved s = solve_case(case_a_text);
  REQUIRE(s.sol.converged);
  CHECK(s.sol.iterations < 50);

  // Mass balance and loop closure recomputed with the independent headloss oracle.
  const std::vector<double> dh = oracle_headlosses(s.net, s.sol.flows);
  const Eigen::MatrixXd fd(s.loops.junction_incidence);
  for (std::size_t r = 0; r < s.net.junctions().size(); ++r) {
    double net_in = 0.0;
    for (std::size_t j = 0; j < s.sol.flows.size(); ++j) net_in += fd(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * s.sol.flows[j];
    CHECK(net_in == doctest::Approx(s.net.nodes()[s.net.junctions()[r]].demand).epsilon(1e-9));
  }
  for (const Loop& l : s.loops.loops) {
    double sum = 0.0;
    for (const LoopMember& m : l.members) sum += m.sign * dh[m.pipe];
    CHECK(std::abs(sum) < 1e-6);
  }

  const double q6 = test::flow_of(s.net, s.sol, "6");
  CHECK(q6 == doctest::Approx(5e-4).epsilon(1e-9));
  const std::size_t n1 = *s.net.find_node("1");
  CHECK(s.sol.heads[n1] == doctest::Approx(120.84 - test::hw_headloss(100, 130, 0.04, q6)).epsilon(1e-9));
  CHECK(s.sol.heads[n1] == doctest::Approx(120.18).epsilon(1e-4));
  CHECK(s.sol.pressures[n1] == doctest::Approx(20.18).epsilon(1e-4));
  const std::size_t t = s.net.tanks().front();
  CHECK(s.sol.pressures[t] == doctest::Approx(20.84));
  CHECK(s.sol.tank_outflows[t] == doctest::Approx(5e-4));
}

TEST_CASE("town network solves within the published precision") {
  const Solved s = solve_case(case_b_text);
  REQUIRE(s.sol.converged);
  const std::vector<double> expected{13.97, 8.72, -0.72, 1.28, 6.28, -4.74, 21.03, 26.03, 40.00};
  for (std::size_t j = 0; j < expected.size(); ++j) {
    CAPTURE(j);
    CHECK(std::abs(s.sol.flows[j] * 1e3 - expected[j]) <= 0.02);
  }
  for (std::size_t j : s.net.junctions()) {
    CHECK(s.sol.pressures[j] >= 10.0 - 1e-3);
    CHECK(s.sol.pressures[j] <= 30.0);
  }
}

TEST_CASE("heads are independent of the propagation path") {
  for (const char* text : {case_a_text, case_b_text, case_c_text}) {
    const Solved s = solve_case(text);
    REQUIRE(s.sol.converged);
    const SolverOptions defaults;
    CHECK(s.sol.path_discrepancy <= 10 * defaults.tol_energy);
    const HeadField field = node_heads(s.net, s.sol.flows);
    for (std::size_t i = 0; i < field.heads.size(); ++i) CHECK(field.heads[i] == doctest::Approx(s.sol.heads[i]));
  }
}

TEST_CASE("energy closes around cycles outside the basis") {
  for (const char* text : {case_a_text, case_b_text, case_c_text}) {
    const Solved s = solve_case(text);
    REQUIRE(s.sol.converged);
    const std::vector<double> dh = oracle_headlosses(s.net, s.sol.flows);
    const auto cycles = simple_cycles(s.net, 200);
    CHECK(cycles.size() >= s.loops.loops.size() - (s.net.tanks().size() - 1));
    for (const auto& cycle : cycles) {
      double sum = 0.0;
      for (const auto& [pipe, sign] : cycle) sum += sign * dh[pipe];
      CHECK(std::abs(sum) <= 1e-5 * static_cast<double>(cycle.size()));
    }
  }
}

TEST_CASE("reversing a pipe negates its flow and leaves heads unchanged") {
  for (const char* text : {case_a_text, case_b_text, case_c_text}) {
    InputDocument doc = test::case_doc(text);
    const Network base = build_network(doc.network);
    const FlowSolution a = solve_wfp(base, cycle_basis(base));
    for (std::size_t k = 0; k < doc.network.pipes.size(); k += 2) std::swap(doc.network.pipes[k].from, doc.network.pipes[k].to);
    const Network flipped = build_network(doc.network);
    const FlowSolution b = solve_wfp(flipped, cycle_basis(flipped));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    for (std::size_t j = 0; j < a.flows.size(); ++j) {
      const double sign = j % 2 == 0 ? -1.0 : 1.0;
      CHECK(b.flows[j] == doctest::Approx(sign * a.flows[j]).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < a.heads.size(); ++i) CHECK(b.heads[i] == doctest::Approx(a.heads[i]).epsilon(1e-9));
  }
}

TEST_CASE("explicit and automatic loops give the same flows") {
  const InputDocument doc = test::case_doc(case_a_text);
  const Network net = build_network(doc.network);
  const FlowSolution a = solve_wfp(net, cycle_basis(net));
  const FlowSolution b = solve_wfp(net, accept_explicit_loops(net, loop_rows(doc, net)));
  for (std::size_t j = 0; j < a.flows.size(); ++j) CHECK(b.flows[j] == doctest::Approx(a.flows[j]).epsilon(1e-8));
}

TEST_CASE("iteration cap reports non-convergence with the best iterate") {
  const Network net = test::case_network(case_c_text);
  SolverOptions opts;
  opts.max_iterations = 1;
  const FlowSolution sol = solve_wfp(net, cycle_basis(net), opts);
  CHECK_FALSE(sol.converged);
  CHECK_FALSE(sol.message.empty());
  CHECK(sol.flows.size() == net.pipes().size());
}

TEST_CASE("mean absolute error") {
  const std::vector<double> a{1.0, 2.0, 3.0}, b{1.5, 2.0, 2.0};
  CHECK(mae(a, b) == doctest::Approx(0.5));
  CHECK(mae(a, a) == 0.0);
  const std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(mae(a, shorter), std::invalid_argument);
  CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}
