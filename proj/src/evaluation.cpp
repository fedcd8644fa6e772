#include "hystdyn/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "hystdyn/error.hpp"

namespace hystdyn {

LstmPredictor::LstmPredictor(const LstmModel& model)
    : model_(model), state_(LstmState::zeros(model.net.hidden_dim())) {}

void LstmPredictor::reset() { state_ = LstmState::zeros(model_.net.hidden_dim()); }

double LstmPredictor::step(std::span<const double> window) {
  return predict_step(model_.net, window, state_);
}

std::unique_ptr<StepPredictor> make_predictor(const AnyModel& model) {
  if (const auto* lstm = std::get_if<LstmModel>(&model)) {
    return std::make_unique<LstmPredictor>(*lstm);
  }
  return std::make_unique<LinearPredictor>(std::get<LinearModel>(model));
}

std::string to_string(EvalMode mode) { return mode == EvalMode::OneStep ? "one_step" : "rollout"; }

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "one_step" || s == "onestep") return EvalMode::OneStep;
  if (s == "rollout") return EvalMode::Rollout;
  throw ConfigError("unknown evaluation mode '" + s + "'");
}

namespace {

void check_compatible(const StepPredictor& model, const TimeSeries& series,
                      const EvalOptions& options) {
  const int k = model.meta().input.k();
  if (options.expected_k && *options.expected_k != k) {
    throw ConfigError("model was trained for k=" + std::to_string(k) +
                      ", refusing to evaluate it as k=" + std::to_string(*options.expected_k));
  }
  check_supports(series, model.meta().input);
}

void finish(EvalReport& report, double wall_seconds) {
  report.wall_time_s = wall_seconds;
  report.rmse_deg = trajectory_rmse(report);
  const RealtimeFactor rf = realtime_factor(report, report.dt);
  report.realtime_factor = rf.value;
  report.realtime_capped = rf.capped;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

EvalReport one_step_eval(StepPredictor& model, const TimeSeries& series,
                         const EvalOptions& options) {
  check_compatible(model, series, options);
  if (series.size() < 2) throw DataError("one-step evaluation needs at least 2 samples");
  const ModelMeta& meta = model.meta();

  EvalReport report;
  report.mode = EvalMode::OneStep;
  report.k = meta.input.k();
  report.model_type = model.model_type();
  report.dt = series.dt();
  report.t0_index = 1;
  report.trajectory.reserve(series.size() - 1);

  const auto start = Clock::now();
  model.reset();
  for (std::size_t t = 1; t < series.size(); ++t) {
    const FeatureWindow w = build_feature_window(series, t, meta.input, meta.scalers);
    const double pred = meta.scalers.theta.descale(model.step(w.values));
    report.trajectory.push_back({series.time(t), series.theta()[t], pred});
  }
  finish(report, seconds_since(start));
  return report;
}

EvalReport rollout(StepPredictor& model, const TimeSeries& series, std::size_t t0,
                   const EvalOptions& options) {
  check_compatible(model, series, options);
  if (t0 < 1 || t0 + 1 >= series.size()) {
    throw std::out_of_range("rollout start index " + std::to_string(t0) +
                            " must satisfy 1 <= t0 < " + std::to_string(series.size() - 1));
  }
  const ModelMeta& meta = model.meta();

  EvalReport report;
  report.mode = EvalMode::Rollout;
  report.k = meta.input.k();
  report.model_type = model.model_type();
  report.dt = series.dt();
  report.t0_index = t0;
  report.trajectory.reserve(series.size() - t0 - 1);

  const auto start = Clock::now();
  model.reset();
  for (std::size_t t = 1; t <= t0; ++t) {
    model.step(build_feature_window(series, t, meta.input, meta.scalers).values);
  }
  double theta_prev = series.theta()[t0];
  for (std::size_t t = t0 + 1; t < series.size(); ++t) {
    const FeatureWindow w = build_feature_window(series, t, meta.input, meta.scalers, theta_prev);
    theta_prev = meta.scalers.theta.descale(model.step(w.values));
    if (!std::isfinite(theta_prev)) {
      throw NumericalError("rollout produced a non-finite prediction at sample " +
                           std::to_string(t));
    }
    report.trajectory.push_back({series.time(t), series.theta()[t], theta_prev});
  }
  finish(report, seconds_since(start));
  return report;
}

double trajectory_rmse(const EvalReport& report) {
  if (report.trajectory.empty()) throw DataError("empty trajectory");
  double acc = 0.0;
  for (const auto& p : report.trajectory) {
    const double e = p.theta_pred_deg - p.theta_true_deg;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(report.trajectory.size()));
}

DriftMetric drift_metric(const EvalReport& report, double window_s) {
  if (!(window_s > 0.0)) throw ConfigError("drift window must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(window_s / report.dt));
  if (steps == 0 || report.trajectory.size() <= 2 * steps) {
    throw DataError("trajectory too short for two " + std::to_string(window_s) + " s windows");
  }
  auto window_rmse = [&](std::size_t begin) {
    double acc = 0.0;
    for (std::size_t i = begin; i < begin + steps; ++i) {
      const double e = report.trajectory[i].theta_pred_deg - report.trajectory[i].theta_true_deg;
      acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(steps));
  };
  return {window_rmse(0), window_rmse(report.trajectory.size() - steps)};
}

RealtimeFactor realtime_factor(const EvalReport& report, double dt) {
  if (!(dt > 0.0)) throw ConfigError("realtime_factor: dt must be positive");
  if (report.wall_time_s < 0.0) throw DataError("realtime_factor: negative wall time");
  const double simulated = static_cast<double>(report.trajectory.size()) * dt;
  if (report.wall_time_s == 0.0) return {kRealtimeFactorCap, true};
  const double f = simulated / report.wall_time_s;
  if (f > kRealtimeFactorCap) return {kRealtimeFactorCap, true};
  return {f, false};
}

void save_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j = {{"mode", to_string(report.mode)},
                      {"k", report.k},
                      {"model_type", report.model_type},
                      {"label", report.label},
                      {"rmse_deg", report.rmse_deg},
                      {"n_steps", report.trajectory.size()},
                      {"dt", report.dt},
                      {"t0_index", report.t0_index},
                      {"wall_time_s", report.wall_time_s},
                      {"realtime_factor", report.realtime_factor},
                      {"realtime_capped", report.realtime_capped}};
  if (report.mode == EvalMode::Rollout && report.dt > 0.0) {
    try {
      const DriftMetric d = drift_metric(report, 60.0);
      j["drift_rmse_first_60s"] = d.rmse_first;
      j["drift_rmse_last_60s"] = d.rmse_last;
    } catch (const DataError&) {
      // Too short for a drift window; omit it.
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

EvalReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    EvalReport r;
    r.mode = eval_mode_from_string(j.at("mode").get<std::string>());
    r.k = j.at("k").get<int>();
    r.model_type = j.at("model_type").get<std::string>();
    r.label = j.value("label", std::string());
    r.rmse_deg = j.at("rmse_deg").get<double>();
    r.dt = j.value("dt", kDefaultDt);
    r.t0_index = j.value("t0_index", std::size_t{1});
    r.wall_time_s = j.value("wall_time_s", 0.0);
    r.realtime_factor = j.value("realtime_factor", 0.0);
    r.realtime_capped = j.value("realtime_capped", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad report " + path.string() + ": " + e.what());
  }
}

void save_trajectory_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t_s,theta_true_deg,theta_pred_deg\n";
  char buf[96];
  for (const auto& p : report.trajectory) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.t_s, p.theta_true_deg,
                  p.theta_pred_deg);
    out << buf;
  }
}

std::size_t rollout_start_index(const TimeSeries& series, double t0_seconds) {
  if (!(t0_seconds >= 0.0)) throw ConfigError("t0 must be non-negative");
  const auto idx = static_cast<std::size_t>(std::llround(t0_seconds / series.dt()));
  if (idx < 1 || idx + 1 >= series.size()) {
    throw ConfigError("t0 = " + std::to_string(t0_seconds) + " s lies outside the data (" +
                      std::to_string(series.size()) + " samples at dt=" +
                      std::to_string(series.dt()) + ")");
  }
  return idx;
}

}  // namespace hystdyn
