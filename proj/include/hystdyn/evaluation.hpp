#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hystdyn/baseline.hpp"
#include "hystdyn/checkpoint.hpp"
#include "hystdyn/datamodel.hpp"
#include "hystdyn/model.hpp"

namespace hystdyn {

/// A model that maps one feature window to a scaled theta prediction,
/// possibly carrying recurrent state between calls.
class StepPredictor {
 public:
  virtual ~StepPredictor() = default;
  virtual const ModelMeta& meta() const = 0;
  virtual std::string model_type() const = 0;
  /// Clear recurrent state (start of a sequence).
  virtual void reset() = 0;
  virtual double step(std::span<const double> window) = 0;
};

class LstmPredictor final : public StepPredictor {
 public:
  explicit LstmPredictor(const LstmModel& model);
  const ModelMeta& meta() const override { return model_.meta; }
  std::string model_type() const override { return "lstm"; }
  void reset() override;
  double step(std::span<const double> window) override;

 private:
  const LstmModel& model_;
  LstmState state_;
};

class LinearPredictor final : public StepPredictor {
 public:
  explicit LinearPredictor(const LinearModel& model) : model_(model) {}
  const ModelMeta& meta() const override { return model_.meta; }
  std::string model_type() const override { return "linear"; }
  void reset() override {}
  double step(std::span<const double> window) override {
    return predict_linear_scaled(model_, window);
  }

 private:
  const LinearModel& model_;
};

std::unique_ptr<StepPredictor> make_predictor(const AnyModel& model);

enum class EvalMode { OneStep, Rollout };
std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& s);

struct TrajectoryPoint {
  double t_s;
  double theta_true_deg;
  double theta_pred_deg;
};

/// Realtime factor reported when the measured wall time is zero.
inline constexpr double kRealtimeFactorCap = 1e9;

struct EvalReport {
  EvalMode mode = EvalMode::OneStep;
  int k = 1;
  std::string model_type;
  double rmse_deg = 0.0;
  std::vector<TrajectoryPoint> trajectory;
  double wall_time_s = 0.0;
  double realtime_factor = 0.0;
  bool realtime_capped = false;
  double dt = kDefaultDt;
  /// First rollout-fed sample (rollout) or 1 (one-step).
  std::size_t t0_index = 1;
  std::string label;
};

struct EvalOptions {
  /// Reject the model unless it was trained for this k.
  std::optional<int> expected_k;
};

/// Teacher-forced one-step prediction over t = 1 .. N-1, threading recurrent
/// state chronologically from a zero state.
EvalReport one_step_eval(StepPredictor& model, const TimeSeries& series,
                         const EvalOptions& options = {});

/// Open-loop rollout. Samples [1, t0] are run teacher-forced to warm the
/// recurrent state, theta~(t0) is set to the measured theta(t0), and every
/// later window uses the previous prediction instead of the measurement.
EvalReport rollout(StepPredictor& model, const TimeSeries& series, std::size_t t0,
                   const EvalOptions& options = {});

struct DriftMetric {
  double rmse_first = 0.0;
  double rmse_last = 0.0;
};

/// RMSE over the first and the last window_s seconds of a trajectory.
DriftMetric drift_metric(const EvalReport& report, double window_s);

struct RealtimeFactor {
  double value = 0.0;
  bool capped = false;
};

/// Simulated seconds per wall-clock second: steps * dt / wall_time.
RealtimeFactor realtime_factor(const EvalReport& report, double dt);

/// RMSE recomputed from the stored trajectory.
double trajectory_rmse(const EvalReport& report);

void save_report_json(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report_json(const std::filesystem::path& path);
void save_trajectory_csv(const EvalReport& report, const std::filesystem::path& path);

/// Rollout start index for a start time given in seconds from the series start.
std::size_t rollout_start_index(const TimeSeries& series, double t0_seconds);

}  // namespace hystdyn
