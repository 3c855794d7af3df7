#include "wdn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "wdn/error.hpp"
#include "wdn/fixtures.hpp"

namespace wdn {

namespace {

int code(ExitCode c) { return static_cast<int>(c); }

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return code(ExitCode::Validation);
  }
}

void emit(const Report& report, const CommandOptions& options, std::ostream& out) {
  if (options.format == OutputFormat::Machine) {
    out << to_json(report).dump(2) << "\n";
  } else {
    out << render_table(report);
  }
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

Report solved_report(const std::string& command, const InputDocument& doc, const Scenario& s,
                     const FlowSolution& flow, const CommandOptions& options) {
  Report r = make_report(command, s.network, flow);
  append(r.warnings, doc.warnings);
  if (options.reference) {
    if (doc.reference_flows.empty() && doc.reference_pressures.empty()) {
      throw ValidationError("--reference given but the input has no [REFERENCE] data");
    }
    if (flow.converged) r.mae = reference_errors(doc, s.network, flow);
  }
  return r;
}

void require_economics(const InputDocument& doc, const std::string& command) {
  if (!doc.economics) throw ValidationError(command + " needs an [ECONOMICS] section");
}

}  // namespace

Scenario build_scenario(const InputDocument& doc, const CommandOptions& options) {
  Scenario s;
  s.network = build_network(doc.network);
  if (options.loops == LoopMode::Explicit) {
    if (doc.loops.empty()) throw ValidationError("--loops explicit needs a [LOOPS] section");
    s.loops = accept_explicit_loops(s.network, loop_rows(doc, s.network));
  } else {
    s.loops = cycle_basis(s.network);
  }
  if (options.tol_mass) {
    if (!(*options.tol_mass > 0.0)) throw ValidationError("mass tolerance must be positive");
    s.solver.tol_mass = *options.tol_mass;
  }
  if (options.tol_energy) {
    if (!(*options.tol_energy > 0.0)) throw ValidationError("energy tolerance must be positive");
    s.solver.tol_energy = *options.tol_energy;
  }
  return s;
}

int run_solve(const InputDocument& doc, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = build_scenario(doc, options);
    const FlowSolution flow = solve_wfp(s.network, s.loops, s.solver);
    emit(solved_report("solve", doc, s, flow, options), options, out);
    if (!flow.converged) {
      err << "error: " << flow.message << "\n";
      return code(ExitCode::NonConvergence);
    }
    return code(ExitCode::Ok);
  });
}

int run_cost(const InputDocument& doc, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_economics(doc, "cost");
    const Scenario s = build_scenario(doc, options);
    const FlowSolution flow = solve_wfp(s.network, s.loops, s.solver);
    Report r = solved_report("cost", doc, s, flow, options);
    if (!flow.converged) {
      emit(r, options, out);
      err << "error: " << flow.message << "\n";
      return code(ExitCode::NonConvergence);
    }
    const CostBreakdown cost =
        total_cost(s.network, flow, economics_or_default(doc), wind_or_default(doc), foundation_or_default(doc));
    r.cost = make_cost_row(s.network, cost);
    append(r.warnings, cost.warnings);
    emit(r, options, out);
    return code(ExitCode::Ok);
  });
}

int run_design(const InputDocument& doc, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_economics(doc, "design");
    const Scenario s = build_scenario(doc, options);
    const EconomicParams econ = economics_or_default(doc);
    const WindParams wind = wind_or_default(doc);
    const FoundationParams foundation = foundation_or_default(doc);
    const DesignSettings settings = doc.design.value_or(DesignSettings{});

    DesignOptions opts;
    opts.starts = settings.starts;
    opts.max_starts = settings.max_starts;
    opts.seed = options.seed.value_or(settings.seed);
    opts.feasibility_tolerance = settings.tolerance;
    opts.solver = s.solver;
    if (settings.baseline) opts.baseline = current_design(s.network);

    const DesignSolution best = solve_dom(s.network, s.loops, settings.bounds, econ, wind, foundation, opts);

    Report r = make_report("design", best.network, best.flow);
    append(r.warnings, doc.warnings);
    if (best.flow.converged) {
      r.cost = make_cost_row(best.network, best.cost);
      append(r.warnings, best.cost.warnings);
      if (options.reference && (!doc.reference_flows.empty() || !doc.reference_pressures.empty())) {
        r.mae = reference_errors(doc, best.network, best.flow);
      }
    }
    DesignRow d;
    d.feasible = best.feasible;
    d.max_violation = best.max_violation;
    d.starts = static_cast<int>(best.trace.size());
    d.evaluations = best.evaluations;
    d.message = best.message;
    if (opts.baseline) {
      const DesignEvaluation base_eval =
          evaluate_design(s.network, s.loops, *opts.baseline, settings.bounds, econ, wind, foundation, s.solver);
      if (base_eval.flow.converged) {
        const DesignSolution baseline =
            make_solution(s.network, *opts.baseline, base_eval, settings.bounds, settings.tolerance);
        d.baseline_total = baseline.cost.total;
        if (best.flow.converged) d.deltas = compare_designs(baseline, best);
        if (!baseline.feasible) r.warnings.push_back("the baseline design violates the design constraints");
      }
    }
    r.design = d;
    emit(r, options, out);
    if (!best.feasible) {
      err << "error: " << best.message << "\n";
      return code(ExitCode::InfeasibleDesign);
    }
    return code(ExitCode::Ok);
  });
}

int cmd_solve(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  InputDocument doc;
  if (const int rc = guarded(err, [&] { doc = read_input(path); return 0; }); rc != 0) return rc;
  return run_solve(doc, options, out, err);
}

int cmd_cost(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  InputDocument doc;
  if (const int rc = guarded(err, [&] { doc = read_input(path); return 0; }); rc != 0) return rc;
  return run_cost(doc, options, out, err);
}

int cmd_design(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  InputDocument doc;
  if (const int rc = guarded(err, [&] { doc = read_input(path); return 0; }); rc != 0) return rc;
  return run_design(doc, options, out, err);
}

std::vector<BundledCase> bundled_cases() {
  return {{"a", case_a_text}, {"b", case_b_text}, {"c", case_c_text}};
}

namespace {

struct Threshold {
  std::string series;
  double max_abs = 0.0;                 // per-pipe |dQ| against Q_m, L/s
  std::optional<double> mae;            // against `mae_series`, L/s
  std::string mae_series;
  bool pressure_window = false;         // junction pressures within [10, 30] m
};

Threshold threshold_for(const std::string& name) {
  if (name == "a") return {"Q_m", 0.005, std::nullopt, "", true};
  if (name == "b") return {"Q_m", 0.02, 0.01, "Q_m", false};
  if (name == "c") return {"Q_m", 0.5, 0.2, "Q_h", false};
  throw ValidationError("unknown benchmark case '" + name + "'");
}

}  // namespace

std::vector<CaseCheck> validate_case(const BundledCase& bundled) {
  const Threshold t = threshold_for(bundled.name);
  const InputDocument doc = parse_input(bundled.text);
  CommandOptions options;
  options.loops = doc.loops.empty() ? LoopMode::Auto : LoopMode::Explicit;
  const Scenario s = build_scenario(doc, options);
  const FlowSolution flow = solve_wfp(s.network, s.loops, s.solver);

  std::vector<CaseCheck> checks;
  checks.push_back({bundled.name, "converged", flow.converged ? 1.0 : 0.0, 1.0, flow.converged});
  if (!flow.converged) return checks;

  const std::vector<MaeRow> errors = reference_errors(doc, s.network, flow);
  auto find = [&](const std::string& series) -> const MaeRow* {
    for (const MaeRow& m : errors) {
      if (m.quantity == "flow" && m.series == series) return &m;
    }
    return nullptr;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const MaeRow* per_pipe = find(t.series);
  const double worst = per_pipe ? per_pipe->max_abs : nan;
  checks.push_back({bundled.name, "max |dQ| vs " + t.series + " [L/s]", worst, t.max_abs, worst <= t.max_abs});
  if (t.mae) {
    const MaeRow* m = find(t.mae_series);
    const double v = m ? m->mae : nan;
    checks.push_back({bundled.name, "MAE vs " + t.mae_series + " [L/s]", v, *t.mae, v <= *t.mae});
  }
  if (t.pressure_window) {
    const DesignBounds b;
    const double tol = 1e-3;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t j : s.network.junctions()) {
      margin = std::min({margin, flow.pressures[j] - b.p_min, b.p_max - flow.pressures[j]});
    }
    checks.push_back({bundled.name, "pressure margin to [10, 30] m", margin, -tol, margin >= -tol});
  }
  return checks;
}

int cmd_validate(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<CaseCheck> all;
    for (const BundledCase& c : bundled_cases()) {
      if (!options.cases.empty() && std::find(options.cases.begin(), options.cases.end(), c.name) == options.cases.end()) {
        continue;
      }
      const std::vector<CaseCheck> checks = validate_case(c);
      all.insert(all.end(), checks.begin(), checks.end());
    }
    if (options.format == OutputFormat::Machine) {
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const CaseCheck& c : all) {
        j.push_back({{"case", c.case_name},
                     {"metric", c.metric},
                     {"value", std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json(nullptr)},
                     {"limit", c.limit},
                     {"pass", c.pass}});
      }
      out << j.dump(2) << "\n";
    } else {
      for (const CaseCheck& c : all) {
        out << fmt::format("case {}  {:<32} {:>12.6f}  limit {:>9.4f}  {}\n", c.case_name, c.metric, c.value, c.limit,
                           c.pass ? "PASS" : "FAIL");
      }
    }
    bool ok = true;
    for (const CaseCheck& c : all) {
      if (!c.pass) {
        ok = false;
        err << "case " << c.case_name << ": " << c.metric << " = " << c.value << " breaches limit " << c.limit << "\n";
      }
    }
    return ok ? code(ExitCode::Ok) : code(ExitCode::AcceptanceFailure);
  });
}

}  // namespace wdn
