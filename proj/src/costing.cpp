#include "wdn/costing.hpp"

#include <cmath>
#include <sstream>

#include "wdn/error.hpp"

namespace wdn {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

}  // namespace

std::vector<double> default_pipeline_coefficients() {
  return {4.1, 0.0, -1.87e-1, 5.76e-3, -4.74e-5, 1.85e-7, -3.32e-10, 2.27e-13};
}

std::vector<double> default_supply_catalog() {
  return {20, 25, 32, 40, 50, 63, 75, 90, 100, 110, 125, 150, 175, 200, 250,
          300, 350, 400, 450, 500, 600, 700, 800, 900, 1000, 1200};
}

void validate(const EconomicParams& econ) {
  require(econ.lifespan >= 1.0, "economics: lifespan must be at least one year");
  require(econ.energy_price >= 0.0, "economics: energy price must be nonnegative");
  require(econ.material_unit_cost >= 0.0, "economics: tank material cost must be nonnegative");
  require(econ.interest_rate > -1.0 && econ.energy_escalation > -1.0, "economics: rates must exceed -100%");
  require(econ.pipeline_coefficients.size() <= 8, "economics: pipeline polynomial degree must be at most 7");
  require(econ.max_supply_velocity > 0.0, "economics: maximum supply velocity must be positive");
  require(!econ.supply_catalog.empty(), "economics: supply pipe catalog is empty");
  for (std::size_t i = 0; i < econ.supply_catalog.size(); ++i) {
    require(econ.supply_catalog[i] > 0.0, "economics: supply pipe catalog entries must be positive");
    require(i == 0 || econ.supply_catalog[i] > econ.supply_catalog[i - 1],
            "economics: supply pipe catalog must be strictly ascending");
  }
}

void validate(const WindParams& wind) {
  require(wind.speed >= 0.0, "wind: speed must be nonnegative");
  require(wind.exponent > -1.0, "wind: exponent must exceed -1");
}

void validate(const FoundationParams& f) {
  require(f.a1 >= 0.0 && f.a2 >= 0.0 && f.a3 >= 0.0, "foundation: coefficients must be nonnegative");
  require(f.b1 > 0.0 && f.b2 > 0.0 && f.b3 > 0.0, "foundation: exponents must be positive");
}

double pump_flow(double tank_outflow, double hour_factor, double network_hours, double pump_hours) {
  return tank_outflow / hour_factor * (network_hours / pump_hours);
}

PumpHead pump_head(double water_depth, double base_elevation, double pump_elevation, double resistance, double exponent,
                   double flow) {
  PumpHead h;
  h.geometric = water_depth + (base_elevation - pump_elevation);
  h.total = h.geometric + headloss(resistance, exponent, flow);
  return h;
}

PumpEnergy pump_energy_cost(double head, double flow, double specific_weight, double daily_hours, double efficiency,
                            double energy_price) {
  PumpEnergy e;
  e.power = specific_weight * flow * head / (1000.0 * efficiency);
  e.energy = e.power * daily_hours;
  e.daily_cost = energy_price * e.energy;
  return e;
}

double npv_factor(double interest_rate, double energy_escalation, double lifespan) {
  if (std::abs(interest_rate - energy_escalation) < 1e-12) return lifespan / (1.0 + interest_rate);
  const double ratio = std::pow((1.0 + energy_escalation) / (1.0 + interest_rate), lifespan);
  return (1.0 - ratio) / (interest_rate - energy_escalation);
}

double pump_npv(double daily_cost, double npv) { return npv * daily_cost * 365.0; }

double tank_volume(double total_demand, double day_factor) { return day_factor * total_demand * 86400.0 / 3.0; }

double tank_diameter(double volume, double water_depth) { return std::sqrt(4.0 * volume / (kPi * water_depth)); }

double tank_material_cost(double unit_cost, double diameter, double water_depth) {
  return unit_cost * kPi * diameter * (diameter * diameter / 2.0 + water_depth);
}

double wind_coefficient(double speed, double exponent) {
  return 0.613 * (0.75 * 0.75 * speed * speed) / std::pow(10.0, exponent);
}

double wind_moment(double diameter, double coefficient, double exponent, double height_above_ground,
                   double water_depth) {
  const double e = exponent + 2.0;
  const double band = std::pow(height_above_ground + water_depth, e) - std::pow(height_above_ground, e);
  return 0.5 * kPi * diameter * coefficient * band / e / 1000.0;
}

double wind_force(double diameter, double coefficient, double exponent, double height_above_ground,
                  double water_depth) {
  const double e = exponent + 1.0;
  const double band = std::pow(height_above_ground + water_depth, e) - std::pow(height_above_ground, e);
  return 0.5 * kPi * diameter * coefficient * band / e / 1000.0;
}

double foundation_cost(double volume, double moment, double force, const FoundationParams& p) {
  return p.a1 * std::pow(volume, p.b1) + p.a2 * std::pow(moment, p.b2) + p.a3 * std::pow(force, p.b3);
}

TankCost tank_total_cost(double volume, double height_above_ground, double water_depth, const EconomicParams& econ,
                         const WindParams& wind, const FoundationParams& foundation) {
  TankCost c;
  c.volume = volume;
  c.diameter = tank_diameter(volume, water_depth);
  const double kw = wind_coefficient(wind.speed, wind.exponent);
  c.moment = wind_moment(c.diameter, kw, wind.exponent, height_above_ground, water_depth);
  c.force = wind_force(c.diameter, kw, wind.exponent, height_above_ground, water_depth);
  c.material = tank_material_cost(econ.material_unit_cost, c.diameter, water_depth);
  c.foundation = foundation_cost(volume, c.moment, c.force, foundation);
  return c;
}

double pipeline_cost(double diameter_mm, const std::vector<double>& coefficients) {
  double value = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) value = value * diameter_mm + *it;
  return value;
}

double supply_pipe_diameter(double flow, double max_velocity, const std::vector<double>& catalog_mm) {
  require(!catalog_mm.empty(), "supply pipe catalog is empty");
  for (double mm : catalog_mm) {
    const double d = mm * 1e-3;
    if (4.0 * std::abs(flow) / (kPi * d * d) <= max_velocity) return d;
  }
  throw ValidationError("no catalog diameter keeps the supply velocity at or below " + fixed(max_velocity, 2) +
                        " m/s for " + fixed(flow * 1e3, 3) + " L/s");
}

double tank_volume_for(const Network& network, std::size_t tank) {
  const Node& node = network.nodes()[tank];
  if (node.volume) return *node.volume;
  if (network.tanks().size() == 1) return tank_volume(network.total_demand(), network.day_factor());
  require(node.demand < 0.0,
          "tank '" + node.id + "': volume must be given, or a negative expected supply from which to derive it");
  return tank_volume(-node.demand, network.day_factor());
}

PumpCost pump_cost(const Network& network, const Pump& pump, double tank_outflow, const EconomicParams& econ) {
  const Node& tank = network.nodes()[pump.tank];
  PumpCost c;
  c.tank = pump.tank;
  c.tank_outflow = tank_outflow;
  c.flow = pump_flow(tank_outflow, network.hour_factor(), network.operating_hours(), pump.operating_hours);
  c.supply_diameter = pump.supply_diameter ? *pump.supply_diameter
                                           : supply_pipe_diameter(c.flow, econ.max_supply_velocity, econ.supply_catalog);
  if (network.model() == HeadlossModel::HazenWilliams) {
    c.exponent = kHazenWilliamsExponent;
    c.resistance = pump.resistance ? *pump.resistance
                                   : resistance_hw(pump.supply_length, pump.supply_roughness, c.supply_diameter);
  } else {
    c.exponent = kDarcyWeisbachExponent;
    if (pump.resistance) {
      c.resistance = *pump.resistance;
    } else {
      const double q = std::max(std::abs(c.flow), 1e-6);
      const double f = friction_factor(reynolds(q, c.supply_diameter, network.fluid().kinematic_viscosity),
                                       pump.supply_roughness, c.supply_diameter);
      c.resistance = resistance_dw(pump.supply_length, c.supply_diameter, f, network.fluid().gravity);
    }
  }
  c.head = pump_head(tank.water_depth, tank.base_elevation(), pump.elevation, c.resistance, c.exponent, c.flow);
  c.energy = pump_energy_cost(c.head.total, c.flow, network.fluid().specific_weight, pump.daily_hours,
                              pump.efficiency, econ.energy_price);
  c.npv = pump_npv(c.energy.daily_cost, npv_factor(econ.interest_rate, econ.energy_escalation, econ.lifespan));
  return c;
}

CostBreakdown total_cost(const Network& network, const FlowSolution& solution, const EconomicParams& econ,
                         const WindParams& wind, const FoundationParams& foundation) {
  validate(econ);
  validate(wind);
  validate(foundation);

  CostBreakdown b;
  b.npv_factor = npv_factor(econ.interest_rate, econ.energy_escalation, econ.lifespan);
  b.wind_coefficient = wind_coefficient(wind.speed, wind.exponent);

  for (const Pipe& pipe : network.pipes()) {
    const double unit = pipeline_cost(pipe.diameter * 1e3, econ.pipeline_coefficients);
    if (unit < 0.0) {
      b.warnings.push_back("pipe '" + pipe.id + "': pipeline polynomial is negative (" + fixed(unit, 4) +
                           " USD/m at " + fixed(pipe.diameter * 1e3, 1) + " mm); clamped to 0");
    }
    b.pipe_costs.push_back(std::max(unit, 0.0) * pipe.length);
    b.pipeline += b.pipe_costs.back();
  }

  for (std::size_t t : network.tanks()) {
    const Node& node = network.nodes()[t];
    const Pump* pump = network.pump_for(t);
    require(pump != nullptr, "tank '" + node.id + "' has no pump");

    TankReport tank{t, tank_total_cost(tank_volume_for(network, t), node.height_above_ground, node.water_depth, econ,
                                       wind, foundation)};
    b.tank_material += tank.cost.material;
    b.tank_foundation += tank.cost.foundation;
    b.tanks.push_back(tank);

    double outflow = t < solution.tank_outflows.size() ? solution.tank_outflows[t] : 0.0;
    if (outflow < 0.0) {
      b.warnings.push_back("tank '" + node.id + "' is filling from the network; pump flow taken as 0");
      outflow = 0.0;
    }
    PumpCost p = pump_cost(network, *pump, outflow, econ);
    b.pump_npv += p.npv;
    b.pumps.push_back(p);
  }

  b.total = b.pipeline + b.tank_material + b.tank_foundation + b.pump_npv;
  return b;
}

}  // namespace wdn
