#include "wdn/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "wdn/error.hpp"

namespace wdn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

using Point = std::vector<double>;

// Unit-box coordinates: (h_r, h_b) per tank, each scaled to its bounds.
Point to_unit(const DesignVariables& vars, const DesignBounds& b) {
  Point x;
  for (const TankDesign& t : vars) {
    x.push_back((t.water_depth - b.h_r_min) / (b.h_r_max - b.h_r_min));
    x.push_back((t.height_above_ground - b.h_b_min) / (b.h_b_max - b.h_b_min));
  }
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
  return x;
}

DesignVariables from_unit(const Point& x, const DesignBounds& b) {
  DesignVariables vars(x.size() / 2);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    vars[i].water_depth = b.h_r_min + x[2 * i] * (b.h_r_max - b.h_r_min);
    vars[i].height_above_ground = b.h_b_min + x[2 * i + 1] * (b.h_b_max - b.h_b_min);
  }
  return vars;
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale /= base;
  }
  return result;
}

unsigned nth_prime(std::size_t n) {
  unsigned candidate = 1;
  std::size_t found = 0;
  while (found <= n) {
    ++candidate;
    bool prime = true;
    for (unsigned d = 2; d * d <= candidate; ++d) {
      if (candidate % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime) ++found;
  }
  return candidate;
}

// Randomly shifted Halton points; the shift comes from the seed.
std::vector<Point> halton_starts(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Point shift(dim);
  for (double& s : shift) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  std::vector<Point> starts;
  for (std::size_t k = 0; k < count; ++k) {
    Point x(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = radical_inverse(k + 1, nth_prime(d)) + shift[d];
      x[d] = v - std::floor(v);
    }
    starts.push_back(std::move(x));
  }
  return starts;
}

struct Objective {
  std::function<const DesignEvaluation&(const Point&)> evaluate;
  double weight = 1.0;

  double operator()(const Point& x) const {
    const DesignEvaluation& e = evaluate(x);
    if (!std::isfinite(e.max_violation)) return kInf;
    return e.cost + weight * e.total_violation;
  }
};

void clamp_unit(Point& x) {
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

// Nelder-Mead on the unit box; trial points are projected onto the box.
Point nelder_mead(const Objective& f, Point x0, int budget, int& used,
                  std::vector<std::pair<double, double>>& history) {
  const std::size_t n = x0.size();
  std::vector<Point> simplex{x0};
  for (std::size_t i = 0; i < n; ++i) {
    Point p = x0;
    p[i] += p[i] + 0.1 <= 1.0 ? 0.1 : -0.1;
    simplex.push_back(p);
  }
  std::vector<double> values;
  for (const Point& p : simplex) values.push_back(f(p));
  used += static_cast<int>(simplex.size());

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Point> s;
    std::vector<double> v;
    for (std::size_t i : order) {
      s.push_back(simplex[i]);
      v.push_back(values[i]);
    }
    simplex = std::move(s);
    values = std::move(v);
  };

  sort_simplex();
  history.emplace_back(f.weight, values[0]);
  while (used < budget) {
    double spread = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) spread = std::max(spread, std::abs(simplex[i][d] - simplex[0][d]));
    }
    if (spread < 1e-9) break;

    Point centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      Point p(n);
      for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + t * (simplex[n][d] - centroid[d]);
      clamp_unit(p);
      return p;
    };

    Point reflected = along(-1.0);
    const double fr = f(reflected);
    ++used;
    if (fr < values[0]) {
      Point expanded = along(-2.0);
      const double fe = f(expanded);
      ++used;
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      Point contracted = along(outside ? -0.5 : 0.5);
      const double fc = f(contracted);
      ++used;
      if (fc < std::min(fr, values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t d = 0; d < n; ++d) simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
          values[i] = f(simplex[i]);
          ++used;
        }
      }
    }
    sort_simplex();
    history.emplace_back(f.weight, values[0]);
  }
  return simplex[0];
}

// Compass search polish; handles active bounds and kinks that stall the simplex.
Point compass(const Objective& f, Point x, int budget, int& used, std::vector<std::pair<double, double>>& history) {
  double fx = f(x);
  ++used;
  double step = 0.02;
  while (step > 1e-10 && used < budget) {
    bool improved = false;
    for (std::size_t d = 0; d < x.size() && used < budget; ++d) {
      for (double dir : {1.0, -1.0}) {
        Point trial = x;
        trial[d] = std::clamp(trial[d] + dir * step, 0.0, 1.0);
        if (trial[d] == x[d]) continue;
        const double ft = f(trial);
        ++used;
        if (ft < fx) {
          x = std::move(trial);
          fx = ft;
          improved = true;
          history.emplace_back(f.weight, fx);
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

}  // namespace

DesignVariables current_design(const Network& network) {
  DesignVariables vars;
  for (std::size_t t : network.tanks()) {
    vars.push_back({network.nodes()[t].water_depth, network.nodes()[t].height_above_ground});
  }
  return vars;
}

Network apply_design(const Network& network, const DesignVariables& vars) {
  require(vars.size() == network.tanks().size(), "design has " + std::to_string(vars.size()) +
                                                     " tank entries for " + std::to_string(network.tanks().size()) +
                                                     " tanks");
  Network out = network;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    out = out.with_tank_geometry(network.tanks()[i], vars[i].water_depth, vars[i].height_above_ground);
  }
  return out;
}

void validate(const DesignBounds& b) {
  require(b.p_min < b.p_max, "design: p_min must be below p_max");
  require(b.h_r_min > 0.0 && b.h_r_min < b.h_r_max, "design: need 0 < h_r_min < h_r_max");
  require(b.h_b_min >= 0.0 && b.h_b_min < b.h_b_max, "design: need 0 <= h_b_min < h_b_max");
  require(b.tank_head_limit() > 0.0, "design: z_max must be positive");
}

DesignEvaluation evaluate_design(const Network& network, const LoopSet& loops, const DesignVariables& vars,
                                 const DesignBounds& bounds, const EconomicParams& econ, const WindParams& wind,
                                 const FoundationParams& foundation, const SolverOptions& solver) {
  const Network designed = apply_design(network, vars);
  LoopSet designed_loops = loops;
  refresh_fixed_heads(designed_loops, designed);

  DesignEvaluation e;
  auto add = [&](Violation::Kind kind, std::size_t node, double amount) {
    if (amount <= 0.0) return;
    e.violations.push_back({kind, node, amount});
    e.max_violation = std::max(e.max_violation, amount);
    e.total_violation += amount;
  };

  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::size_t t = network.tanks()[i];
    const TankDesign& d = vars[i];
    add(Violation::Kind::Bounds, t, std::max(bounds.h_r_min - d.water_depth, d.water_depth - bounds.h_r_max));
    add(Violation::Kind::Bounds, t,
        std::max(bounds.h_b_min - d.height_above_ground, d.height_above_ground - bounds.h_b_max));
    add(Violation::Kind::TankWindow, t, d.height_above_ground + d.water_depth - bounds.tank_head_limit());
  }

  e.flow = solve_wfp(designed, designed_loops, solver);
  if (!e.flow.converged) {
    e.diagnostic = "flow solve failed: " + e.flow.message;
    e.violations.push_back({Violation::Kind::NonConvergence, 0, kInf});
    e.max_violation = kInf;
    e.total_violation = kInf;
    e.cost = kInf;
    return e;
  }

  for (std::size_t j : designed.junctions()) {
    add(Violation::Kind::PressureLow, j, bounds.p_min - e.flow.pressures[j]);
    add(Violation::Kind::PressureHigh, j, e.flow.pressures[j] - bounds.p_max);
  }
  e.breakdown = total_cost(designed, e.flow, econ, wind, foundation);
  e.cost = e.breakdown.total;
  return e;
}

DesignSolution make_solution(const Network& network, const DesignVariables& vars, const DesignEvaluation& eval,
                             const DesignBounds& bounds, double tolerance) {
  DesignSolution s;
  s.variables = vars;
  s.network = apply_design(network, vars);
  s.flow = eval.flow;
  s.cost = eval.breakdown;
  s.violations = eval.violations;
  s.max_violation = eval.max_violation;
  s.feasible = eval.feasible(tolerance);
  if (eval.flow.converged) {
    for (std::size_t j : s.network.junctions()) {
      const double p = eval.flow.pressures[j];
      s.margins.push_back({j, p, p - bounds.p_min, bounds.p_max - p});
    }
  }
  s.message = eval.diagnostic;
  return s;
}

DesignSolution solve_dom(const Network& network, const LoopSet& loops, const DesignBounds& bounds,
                         const EconomicParams& econ, const WindParams& wind, const FoundationParams& foundation,
                         const DesignOptions& options) {
  validate(bounds);
  validate(econ);
  validate(wind);
  validate(foundation);
  require(options.starts >= 1, "design: at least one start is required");
  require(options.max_starts >= 1, "design: start cap must be positive");

  const std::size_t dim = 2 * network.tanks().size();
  const auto count = static_cast<std::size_t>(std::min(options.starts, options.max_starts));

  std::vector<Point> starts;
  if (options.baseline) {
    require(options.baseline->size() == network.tanks().size(), "design: baseline does not match the tank count");
    starts.push_back(to_unit(*options.baseline, bounds));
  }
  for (Point& p : halton_starts(count, dim, options.seed)) starts.push_back(std::move(p));

  // Best feasible and least-violating points over every evaluation, in evaluation order.
  struct Incumbent {
    Point x;
    double cost = kInf;
    double violation = kInf;
  } best_feasible, least_violating;

  DesignEvaluation last;
  Point last_x;
  int evaluations = 0;
  StartTrace* current = nullptr;

  auto evaluate = [&](const Point& x) -> const DesignEvaluation& {
    if (x == last_x && evaluations > 0) return last;
    DesignVariables vars = from_unit(x, bounds);
    // The baseline start is evaluated at its exact coordinates, not the rounded unit-box image.
    if (options.baseline && x == starts.front()) vars = *options.baseline;
    last = evaluate_design(network, loops, vars, bounds, econ, wind, foundation, options.solver);
    last_x = x;
    ++evaluations;
    if (current) ++current->evaluations;
    if (last.feasible(options.feasibility_tolerance)) {
      if (last.cost < best_feasible.cost) best_feasible = {x, last.cost, last.max_violation};
      if (current && last.cost < current->best_cost) {
        current->best_cost = last.cost;
        current->feasible = true;
        current->result = vars;
      }
    } else if (last.total_violation < least_violating.violation) {
      least_violating = {x, last.cost, last.total_violation};
    }
    return last;
  };

  std::vector<StartTrace> traces;
  traces.reserve(starts.size());
  for (const Point& start : starts) {
    traces.push_back({});
    current = &traces.back();
    current->start = options.baseline && &start == &starts.front() ? *options.baseline : from_unit(start, bounds);
    current->best_cost = kInf;

    Objective f{evaluate, 1.0};
    const DesignEvaluation& first = evaluate(start);
    f.weight = std::isfinite(first.cost) ? std::max(1.0, 1e-2 * std::abs(first.cost)) : 1e3;

    Point x = start;
    for (int phase = 0; phase <= options.max_escalations; ++phase) {
      int used = 0;
      x = nelder_mead(f, x, options.evaluations_per_phase, used, current->history);
      x = compass(f, x, options.evaluations_per_phase + used, used, current->history);
      const DesignEvaluation& at = evaluate(x);
      if (at.feasible(options.feasibility_tolerance)) break;
      f.weight *= 10.0;
    }
    if (!current->feasible) current->result = from_unit(x, bounds);
  }
  current = nullptr;

  const bool found = std::isfinite(best_feasible.cost);
  const Point& chosen = found ? best_feasible.x : least_violating.x;
  DesignVariables vars = chosen.empty() ? current_design(network) : from_unit(chosen, bounds);
  if (options.baseline && !chosen.empty() && chosen == starts.front()) vars = *options.baseline;

  const DesignEvaluation final_eval =
      evaluate_design(network, loops, vars, bounds, econ, wind, foundation, options.solver);
  DesignSolution s = make_solution(network, vars, final_eval, bounds, options.feasibility_tolerance);
  s.trace = std::move(traces);
  s.evaluations = evaluations;
  if (found) {
    s.message = "best feasible design over " + std::to_string(starts.size()) + " starts";
  } else {
    s.feasible = false;
    s.message = "no feasible design found over " + std::to_string(starts.size()) +
                " starts; reporting the least-violating candidate" +
                (final_eval.diagnostic.empty() ? "" : " (" + final_eval.diagnostic + ")");
  }
  return s;
}

CostDeltas compare_designs(const DesignSolution& baseline, const DesignSolution& optimized) {
  const auto& a = baseline.network;
  const auto& b = optimized.network;
  bool same = a.nodes().size() == b.nodes().size() && a.pipes().size() == b.pipes().size() &&
              baseline.variables.size() == optimized.variables.size();
  for (std::size_t i = 0; same && i < a.pipes().size(); ++i) same = a.pipes()[i].id == b.pipes()[i].id;
  for (std::size_t i = 0; same && i < a.nodes().size(); ++i) same = a.nodes()[i].id == b.nodes()[i].id;
  require(same, "compare_designs: the two designs describe different scenarios");

  auto delta = [](double base, double opt) {
    if (base == opt) return 0.0;
    if (base == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (base - opt) / base;
  };
  const CostBreakdown& x = baseline.cost;
  const CostBreakdown& y = optimized.cost;
  return {delta(x.pipeline, y.pipeline), delta(x.tank_material, y.tank_material),
          delta(x.tank_foundation, y.tank_foundation), delta(x.pump_npv, y.pump_npv), delta(x.total, y.total)};
}

}  // namespace wdn
