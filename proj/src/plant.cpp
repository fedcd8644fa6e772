#include "hystdyn/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <string>

#include "hystdyn/error.hpp"
#include "hystdyn/numerics.hpp"

namespace hystdyn::plant {

void PlantParams::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(std::string("plant params: ") + msg);
  };
  require(supply_v > 0 && resistance_ohm > 0 && heat_capacity > 0 && convection > 0,
          "electrical and thermal constants must be positive");
  require(torque_gain > 0 && elastic > 0 && time_constant_s > 0, "mechanical constants must be positive");
  require(dt > 0, "dt must be positive");
  require(austenite_finish > austenite_start && austenite_start > martensite_start &&
              martensite_start > martensite_finish && martensite_finish > ambient_c,
          "need A_f > A_s > M_s > M_f > T_amb");
}

double PlantParams::steady_temperature(double u) const {
  return ambient_c + u * supply_v * supply_v / (resistance_ohm * convection);
}

SmaState SmaState::at_rest(const PlantParams& p) {
  return {p.ambient_c, 1.0, Branch::Cooling, p.ambient_c, 1.0};
}

PlantState PlantState::at_rest(const PlantParams& p) {
  return {SmaState::at_rest(p), SmaState::at_rest(p), 0.0};
}

double thermal_step(double temp, double u, const PlantParams& p) {
  const double power = u * p.supply_v * p.supply_v / p.resistance_ohm;
  return temp + p.dt * (power - p.convection * (temp - p.ambient_c)) / p.heat_capacity;
}

namespace {

// Remaining martensite on the heating branch: 1 at A_s, 0 at A_f.
double heating_shape(double temp, const PlantParams& p) {
  const double a = std::numbers::pi / (p.austenite_finish - p.austenite_start);
  const double x = std::clamp(temp, p.austenite_start, p.austenite_finish) - p.austenite_start;
  return 0.5 * (std::cos(a * x) + 1.0);
}

// Remaining austenite on the cooling branch: 1 at M_s, 0 at M_f.
double cooling_shape(double temp, const PlantParams& p) {
  const double a = std::numbers::pi / (p.martensite_start - p.martensite_finish);
  const double x = std::clamp(temp, p.martensite_finish, p.martensite_start) - p.martensite_finish;
  return 0.5 * (1.0 - std::cos(a * x));
}

}  // namespace

SmaState phase_fraction_step(const SmaState& s, double new_temp, const PlantParams& p) {
  SmaState next = s;
  next.temp = new_temp;
  if (new_temp == s.temp) return next;

  const Branch dir = new_temp > s.temp ? Branch::Heating : Branch::Cooling;
  if (dir != s.branch) {
    next.branch = dir;
    next.anchor_temp = s.temp;
    next.anchor_xi = s.xi;
  }

  if (dir == Branch::Heating) {
    const double ref = heating_shape(std::max(next.anchor_temp, p.austenite_start), p);
    double xi = next.anchor_xi;
    if (ref > 0.0) {
      xi = next.anchor_xi * std::min(1.0, heating_shape(new_temp, p) / ref);
    } else if (new_temp >= p.austenite_finish) {
      xi = 0.0;
    }
    next.xi = std::clamp(std::min(xi, s.xi), 0.0, 1.0);
  } else {
    const double anchor_austenite = 1.0 - next.anchor_xi;
    const double ref = cooling_shape(std::min(next.anchor_temp, p.martensite_start), p);
    double austenite = anchor_austenite;
    if (ref > 0.0) {
      austenite = anchor_austenite * std::min(1.0, cooling_shape(new_temp, p) / ref);
    } else if (new_temp <= p.martensite_finish) {
      austenite = 0.0;
    }
    next.xi = std::clamp(std::max(1.0 - austenite, s.xi), 0.0, 1.0);
  }
  return next;
}

double limb_step(double theta, double xi_a, double xi_b, const PlantParams& p) {
  const double drive = p.torque_gain * ((1.0 - xi_a) - (1.0 - xi_b));
  return theta + p.dt * (drive - p.elastic * theta) / p.time_constant_s;
}

PlantState plant_step(const PlantState& s, double u_a, double u_b, const PlantParams& p) {
  PlantState next;
  next.a = phase_fraction_step(s.a, thermal_step(s.a.temp, u_a, p), p);
  next.b = phase_fraction_step(s.b, thermal_step(s.b.temp, u_b, p), p);
  next.theta = limb_step(s.theta, next.a.xi, next.b.xi, p);
  return next;
}

void PiConfig::validate() const {
  if (kp < 0 || ki < 0) throw ConfigError("PI gains must be non-negative");
  if (!(hold_max_s >= hold_min_s && hold_min_s > 0)) throw ConfigError("bad hold-time range");
  if (!(setpoint_uni_max >= setpoint_uni_min && setpoint_bi_max >= setpoint_bi_min)) {
    throw ConfigError("bad setpoint range");
  }
}

PiOutput pi_step(double theta, double setpoint, double integral, const PiConfig& cfg, double dt) {
  const double e = setpoint - theta;
  const double candidate = integral + e * dt;
  double u = cfg.kp * e + cfg.ki * candidate;
  PiOutput out;
  out.integral = candidate;
  if (u > 1.0 || u < -1.0) {
    u = std::clamp(u, -1.0, 1.0);
    out.saturated = true;
    out.integral = integral;
  }
  out.u_a = u > 0.0 ? u : 0.0;
  out.u_b = u < 0.0 ? -u : 0.0;
  return out;
}

PlantConfig load_plant_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plant config " + path.string());
  PlantConfig cfg;
  try {
    const auto j = nlohmann::json::parse(in);
    auto& p = cfg.params;
    p.supply_v = j.value("V", p.supply_v);
    p.resistance_ohm = j.value("R", p.resistance_ohm);
    p.heat_capacity = j.value("C_th", p.heat_capacity);
    p.convection = j.value("h_c", p.convection);
    p.ambient_c = j.value("T_amb", p.ambient_c);
    p.austenite_start = j.value("A_s", p.austenite_start);
    p.austenite_finish = j.value("A_f", p.austenite_finish);
    p.martensite_start = j.value("M_s", p.martensite_start);
    p.martensite_finish = j.value("M_f", p.martensite_finish);
    p.torque_gain = j.value("kappa", p.torque_gain);
    p.elastic = j.value("k_el", p.elastic);
    p.time_constant_s = j.value("tau_m", p.time_constant_s);
    p.dt = j.value("dt", p.dt);
    if (j.contains("pi")) {
      const auto& pj = j["pi"];
      auto& pi = cfg.pi;
      pi.kp = pj.value("K_P", pi.kp);
      pi.ki = pj.value("K_I", pi.ki);
      pi.hold_min_s = pj.value("hold_min_s", pi.hold_min_s);
      pi.hold_max_s = pj.value("hold_max_s", pi.hold_max_s);
      if (pj.contains("setpoint_uni")) {
        pi.setpoint_uni_min = pj["setpoint_uni"].at(0).get<double>();
        pi.setpoint_uni_max = pj["setpoint_uni"].at(1).get<double>();
      }
      if (pj.contains("setpoint_bi")) {
        pi.setpoint_bi_min = pj["setpoint_bi"].at(0).get<double>();
        pi.setpoint_bi_max = pj["setpoint_bi"].at(1).get<double>();
      }
    }
    if (j.contains("noise")) {
      const auto& nj = j["noise"];
      cfg.noise.enabled = nj.value("enabled", cfg.noise.enabled);
      cfg.noise.sigma_temp_c = nj.value("sigma_temp_c", cfg.noise.sigma_temp_c);
      cfg.noise.sigma_theta_deg = nj.value("sigma_theta_deg", cfg.noise.sigma_theta_deg);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("plant config " + path.string() + ": " + e.what());
  }
  cfg.params.validate();
  cfg.pi.validate();
  return cfg;
}

BabbleResult babble(const PlantConfig& cfg, BabbleMode mode, double duration_s,
                    std::uint64_t seed) {
  const PlantParams& p = cfg.params;
  p.validate();
  cfg.pi.validate();
  if (!(duration_s > cfg.pi.hold_max_s)) {
    throw ConfigError("babble duration must exceed the maximum hold time (" +
                      std::to_string(cfg.pi.hold_max_s) + " s)");
  }
  const bool uni = mode == BabbleMode::Unidirectional;
  const double sp_lo = uni ? cfg.pi.setpoint_uni_min : cfg.pi.setpoint_bi_min;
  const double sp_hi = uni ? cfg.pi.setpoint_uni_max : cfg.pi.setpoint_bi_max;

  Rng schedule_rng(seed);
  // Noise draws come from their own stream so toggling noise keeps the schedule.
  Rng noise_rng(seed ^ 0x9E3779B97F4A7C15ULL);

  const auto steps = static_cast<std::size_t>(std::llround(duration_s / p.dt));
  std::vector<double> u_a(steps + 1), u_b(steps + 1), temp_a(steps + 1), temp_b(steps + 1),
      theta(steps + 1);

  std::vector<SetpointSegment> schedule;
  auto next_segment = [&](double t_start) {
    const double sp = schedule_rng.uniform(sp_lo, sp_hi);
    const double hold = schedule_rng.uniform(cfg.pi.hold_min_s, cfg.pi.hold_max_s);
    schedule.push_back({t_start, hold, sp});
  };

  auto measure = [&](std::size_t i, const PlantState& s) {
    const bool noisy = cfg.noise.enabled;
    temp_a[i] = s.a.temp + (noisy ? cfg.noise.sigma_temp_c * noise_rng.normal() : 0.0);
    temp_b[i] = s.b.temp + (noisy ? cfg.noise.sigma_temp_c * noise_rng.normal() : 0.0);
    theta[i] = s.theta + (noisy ? cfg.noise.sigma_theta_deg * noise_rng.normal() : 0.0);
  };

  PlantState state = PlantState::at_rest(p);
  next_segment(0.0);
  measure(0, state);
  double integral = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t_prev = p.dt * static_cast<double>(i - 1);
    while (t_prev >= schedule.back().t_start + schedule.back().hold_s) {
      next_segment(schedule.back().t_start + schedule.back().hold_s);
    }
    const PiOutput pi =
        pi_step(theta[i - 1], schedule.back().setpoint_deg, integral, cfg.pi, p.dt);
    integral = pi.integral;
    u_a[i] = pi.u_a;
    u_b[i] = uni ? 0.0 : pi.u_b;
    state = plant_step(state, u_a[i], u_b[i], p);
    measure(i, state);
  }

  return {TimeSeries(p.dt, 0.0, std::move(u_a), std::move(u_b), std::move(temp_a),
                     std::move(temp_b), std::move(theta)),
          std::move(schedule)};
}

}  // namespace hystdyn::plant
