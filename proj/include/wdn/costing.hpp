#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "wdn/hydraulics.hpp"
#include "wdn/network.hpp"

namespace wdn {

/// Default pipeline polynomial, ascending powers of D in mm.
std::vector<double> default_pipeline_coefficients();

/// Commercial nominal diameters in mm, ascending.
std::vector<double> default_supply_catalog();

struct EconomicParams {
  double energy_price = 0.016;     // P_e, USD/kWh
  double interest_rate = 0.12;     // i_r
  double energy_escalation = 0.06; // i_e
  double lifespan = 25.0;          // n_l, years
  double material_unit_cost = 60.0;  // c_m, USD/m^2
  std::vector<double> pipeline_coefficients = default_pipeline_coefficients();
  double max_supply_velocity = 2.0;  // m/s
  std::vector<double> supply_catalog = default_supply_catalog();  // mm
  bool operator==(const EconomicParams&) const = default;
};

struct WindParams {
  double speed = 40.0;    // v_w, m/s
  double exponent = 0.3;  // p
  bool operator==(const WindParams&) const = default;
};

/// C_f = a1 V^b1 + a2 M^b2 + a3 H^b3 with V in m^3, M in kN m, H in kN.
struct FoundationParams {
  double a1 = 5.177, b1 = 1.2218;
  double a2 = 0.3584, b2 = 1.3285;
  double a3 = 414.3, b3 = 0.3509;
  bool operator==(const FoundationParams&) const = default;
};

/// Throws ValidationError when a parameter is outside its domain.
void validate(const EconomicParams& econ);
void validate(const WindParams& wind);
void validate(const FoundationParams& foundation);

/// Q_pr = (Q_d / k2) (n_WDN / n_p).
double pump_flow(double tank_outflow, double hour_factor, double network_hours, double pump_hours);

struct PumpHead {
  double geometric = 0.0;  // h_g, m
  double total = 0.0;      // H_p, m
};

/// h_g = h_r + (z_b - z_p); H_p = h_g + k_p Q |Q|^(n-1).
PumpHead pump_head(double water_depth, double base_elevation, double pump_elevation, double resistance, double exponent,
                   double flow);

struct PumpEnergy {
  double power = 0.0;       // kW
  double energy = 0.0;      // kWh/day
  double daily_cost = 0.0;  // USD/day
};

PumpEnergy pump_energy_cost(double head, double flow, double specific_weight, double daily_hours, double efficiency,
                            double energy_price);

/// Present-value factor for an escalating annual cost, in years.
double npv_factor(double interest_rate, double energy_escalation, double lifespan);

/// I_NPV * C_e * 365.
double pump_npv(double daily_cost, double npv);

/// One third of the daily demanded volume, scaled by k1.
double tank_volume(double total_demand, double day_factor);

/// sqrt(4 V / (pi h_r)).
double tank_diameter(double volume, double water_depth);

/// c_m pi D (D^2/2 + h_r).
double tank_material_cost(double unit_cost, double diameter, double water_depth);

/// 0.613 (0.75 v_w)^2 / 10^p.
double wind_coefficient(double speed, double exponent);

/// Overturning moment of the power-law wind profile over the tank band, kN m.
double wind_moment(double diameter, double coefficient, double exponent, double height_above_ground,
                   double water_depth);

/// Resultant lateral wind force over the tank band, kN.
double wind_force(double diameter, double coefficient, double exponent, double height_above_ground,
                  double water_depth);

double foundation_cost(double volume, double moment, double force, const FoundationParams& params);

struct TankCost {
  double volume = 0.0;    // m^3
  double diameter = 0.0;  // m
  double moment = 0.0;    // kN m
  double force = 0.0;     // kN
  double material = 0.0;  // USD
  double foundation = 0.0;  // USD
  double total() const { return material + foundation; }
};

TankCost tank_total_cost(double volume, double height_above_ground, double water_depth, const EconomicParams& econ,
                         const WindParams& wind, const FoundationParams& foundation);

/// Per-metre pipe cost at diameter D (mm), Horner evaluation. May be negative.
double pipeline_cost(double diameter_mm, const std::vector<double>& coefficients);

/// Smallest catalog diameter (mm) keeping velocity at or below v_max. Returns metres.
double supply_pipe_diameter(double flow, double max_velocity, const std::vector<double>& catalog_mm);

struct PumpCost {
  std::size_t tank = 0;
  double tank_outflow = 0.0;     // Q_d, m^3/s
  double flow = 0.0;             // Q_pr, m^3/s
  double supply_diameter = 0.0;  // m
  double resistance = 0.0;       // k_p
  double exponent = 2.0;
  PumpHead head;
  PumpEnergy energy;
  double npv = 0.0;  // USD
};

struct TankReport {
  std::size_t tank = 0;
  TankCost cost;
};

struct CostBreakdown {
  double pipeline = 0.0;
  double tank_material = 0.0;
  double tank_foundation = 0.0;
  double pump_npv = 0.0;
  double total = 0.0;
  std::vector<double> pipe_costs;  // USD per pipe
  std::vector<TankReport> tanks;
  std::vector<PumpCost> pumps;
  double npv_factor = 0.0;
  double wind_coefficient = 0.0;
  std::vector<std::string> warnings;
};

/// Volume of a tank: its declared volume, the whole daily volume for a
/// single tank, or its own expected supply otherwise.
double tank_volume_for(const Network& network, std::size_t tank);

/// Pump chain for one tank, given the solved outflow of that tank.
PumpCost pump_cost(const Network& network, const Pump& pump, double tank_outflow, const EconomicParams& econ);

/// Itemized network cost. Every tank needs a pump.
CostBreakdown total_cost(const Network& network, const FlowSolution& solution, const EconomicParams& econ,
                         const WindParams& wind, const FoundationParams& foundation);

}  // namespace wdn
