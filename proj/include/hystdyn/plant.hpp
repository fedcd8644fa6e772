#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hystdyn/datamodel.hpp"

namespace hystdyn::plant {

/// Lumped antagonistic SMA limb. Temperatures in degC, angles in degrees.
struct PlantParams {
  double supply_v = 7.0;
  double resistance_ohm = 8.0;
  double heat_capacity = 0.68;  // J/degC
  double convection = 0.08;    // W/degC
  double ambient_c = 25.0;
  double austenite_start = 68.0;
  double austenite_finish = 78.0;
  double martensite_start = 52.0;
  double martensite_finish = 42.0;
  double torque_gain = 60.0;  // deg per unit austenite fraction
  double elastic = 1.0;
  double time_constant_s = 1.5;
  double dt = kDefaultDt;

  void validate() const;
  /// Steady-state temperature at constant duty u.
  double steady_temperature(double u) const;
};

enum class Branch { Heating, Cooling };

/// One SMA wire. xi is the martensite fraction (1 = cold/extended).
struct SmaState {
  double temp = 25.0;
  double xi = 1.0;
  Branch branch = Branch::Cooling;
  /// Point where the current branch started; scales minor loops.
  double anchor_temp = 25.0;
  double anchor_xi = 1.0;

  static SmaState at_rest(const PlantParams& p);
};

struct PlantState {
  SmaState a;
  SmaState b;
  double theta = 0.0;

  static PlantState at_rest(const PlantParams& p);
};

/// Explicit Euler step of duty-averaged Joule heating with convective loss.
double thermal_step(double temp, double u, const PlantParams& p);

/// Move one wire to temperature new_temp, updating its martensite fraction
/// along cosine transformation branches. Reversals re-anchor the branch.
SmaState phase_fraction_step(const SmaState& s, double new_temp, const PlantParams& p);

/// Austenite in A bends toward +theta, B toward -theta; silicone restores.
double limb_step(double theta, double xi_a, double xi_b, const PlantParams& p);

PlantState plant_step(const PlantState& s, double u_a, double u_b, const PlantParams& p);

struct PiConfig {
  double kp = 0.06;
  double ki = 1e-5;
  double setpoint_uni_min = 0.0;
  double setpoint_uni_max = 45.0;
  double setpoint_bi_min = -45.0;
  double setpoint_bi_max = 45.0;
  double hold_min_s = 1.0;
  double hold_max_s = 30.0;

  void validate() const;
};

struct PiOutput {
  double u_a = 0.0;
  double u_b = 0.0;
  double integral = 0.0;
  bool saturated = false;
};

/// u = Kp e + Ki sum(e dt), saturated to [-1, 1]; u+ drives A, -u- drives B.
/// The integral does not accumulate while the output is saturated.
PiOutput pi_step(double theta, double setpoint, double integral, const PiConfig& cfg, double dt);

struct NoiseConfig {
  bool enabled = false;
  double sigma_temp_c = 0.5;
  double sigma_theta_deg = 0.25;
};

struct PlantConfig {
  PlantParams params;
  PiConfig pi;
  NoiseConfig noise;
};

/// Reads a plant config; absent fields keep their defaults.
PlantConfig load_plant_config(const std::filesystem::path& path);

enum class BabbleMode { Unidirectional, Bidirectional };

struct SetpointSegment {
  double t_start;
  double hold_s;
  double setpoint_deg;
};

struct BabbleResult {
  TimeSeries series;
  std::vector<SetpointSegment> schedule;
};

/// Motor babbling: random setpoints held for random durations, tracked by the
/// PI controller. Row t holds the duty applied over (t-1, t] (computed from the
/// measured theta at t-1) and the temperatures and angle measured at t.
BabbleResult babble(const PlantConfig& cfg, BabbleMode mode, double duration_s, std::uint64_t seed);

}  // namespace hystdyn::plant
