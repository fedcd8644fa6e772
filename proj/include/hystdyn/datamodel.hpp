#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hystdyn/numerics.hpp"

namespace hystdyn {

/// Default resampling period. The source data has no documented rate; 10 Hz
/// makes a 10 minute rollout about 6000 steps.
inline constexpr double kDefaultDt = 0.1;

/// Longest sensor dropout (seconds) that ingestion will interpolate across.
inline constexpr double kMaxGapSeconds = 1.0;

struct Sample {
  double u_a = 0.0;
  double u_b = 0.0;
  double temp_a = 0.0;
  double temp_b = 0.0;
  double theta = 0.0;
};

/// Timestamped record as read from disk, before resampling. Rows may contain
/// NaN for missing sensor readings.
struct RawRecord {
  std::vector<double> time_s;
  std::vector<double> u_a, u_b, temp_a, temp_b, theta;
  /// True when the source had no u_b / temp_b_c columns (zero-filled).
  bool unidirectional = false;

  std::size_t size() const noexcept { return time_s.size(); }
};

/// Uniformly sampled record of (u_A, u_B, T_A, T_B, theta). Immutable.
class TimeSeries {
 public:
  TimeSeries(double dt, double t_start, std::vector<double> u_a, std::vector<double> u_b,
             std::vector<double> temp_a, std::vector<double> temp_b, std::vector<double> theta,
             bool unidirectional = false);

  double dt() const noexcept { return dt_; }
  double t_start() const noexcept { return t_start_; }
  double time(std::size_t i) const noexcept { return t_start_ + dt_ * static_cast<double>(i); }
  std::size_t size() const noexcept { return theta_.size(); }
  bool unidirectional() const noexcept { return unidirectional_; }

  std::span<const double> u_a() const noexcept { return u_a_; }
  std::span<const double> u_b() const noexcept { return u_b_; }
  std::span<const double> temp_a() const noexcept { return temp_a_; }
  std::span<const double> temp_b() const noexcept { return temp_b_; }
  std::span<const double> theta() const noexcept { return theta_; }

  Sample at(std::size_t i) const;

  /// Contiguous copy of samples [begin, end).
  TimeSeries slice(std::size_t begin, std::size_t end) const;
  /// Copy with the theta channel replaced.
  TimeSeries with_theta(std::vector<double> theta) const;

 private:
  double dt_;
  double t_start_;
  std::vector<double> u_a_, u_b_, temp_a_, temp_b_, theta_;
  bool unidirectional_;
};

/// Input-space selector k: 1 (u_A), 2 (u_A, T_A), 3 (u_A, u_B), 4 (u_A, T_A, u_B, T_B).
class InputConfig {
 public:
  explicit InputConfig(int k);

  int k() const noexcept { return k_; }
  std::size_t input_dim() const noexcept;
  /// 2 * input_dim + 1: [v(t), v(t-1), theta(t-1)].
  std::size_t window_dim() const noexcept { return 2 * input_dim() + 1; }
  std::vector<std::string> feature_names() const;
  bool uses_temperature() const noexcept { return k_ == 2 || k_ == 4; }
  bool uses_actuator_b() const noexcept { return k_ >= 3; }

  friend bool operator==(const InputConfig&, const InputConfig&) = default;

 private:
  int k_;
};

/// Affine map of [min, max] onto [0, 1].
class AffineScaler {
 public:
  AffineScaler() = default;
  AffineScaler(double min, double max);

  static AffineScaler fit(std::span<const double> values, std::string_view channel);

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  double range() const noexcept { return max_ - min_; }
  double scale(double x) const noexcept { return (x - min_) / (max_ - min_); }
  double descale(double unit) const noexcept { return min_ + unit * (max_ - min_); }

  friend bool operator==(const AffineScaler&, const AffineScaler&) = default;

 private:
  double min_ = 0.0;
  double max_ = 1.0;
};

/// theta scaler plus a shared temperature scaler (identity when temperature is unused).
struct Scalers {
  AffineScaler theta;
  AffineScaler temperature;

  friend bool operator==(const Scalers&, const Scalers&) = default;
};

Scalers fit_scalers(const TimeSeries& series, const InputConfig& cfg);

struct FeatureWindow {
  Vector values;
  double target = 0.0;
};

/// v_k(t) in raw units, ordered u_A, T_A, u_B, T_B as applicable.
Vector build_input_vector(const TimeSeries& series, std::size_t t, const InputConfig& cfg);

/// X_k(t) = [v_k(t), v_k(t-1), theta(t-1)] with theta and temperatures scaled.
FeatureWindow build_feature_window(const TimeSeries& series, std::size_t t, const InputConfig& cfg,
                                   const Scalers& scalers);

/// Same as above but with theta(t-1) supplied (degrees) instead of read from the
/// series. Used by open-loop rollouts.
FeatureWindow build_feature_window(const TimeSeries& series, std::size_t t, const InputConfig& cfg,
                                   const Scalers& scalers, double theta_prev_deg);

/// Windows for targets t in [begin, end). Each window reads samples t-1 and t.
struct WindowSet {
  std::vector<Vector> inputs;
  Vector targets;
  std::size_t first_target = 0;
  /// Half-open range of source samples read while building the set.
  std::size_t source_begin = 0;
  std::size_t source_end = 0;

  std::size_t size() const noexcept { return targets.size(); }
};

WindowSet build_windows(const TimeSeries& series, const InputConfig& cfg, const Scalers& scalers,
                        std::size_t begin, std::size_t end);
/// All length-1 windows of the series (t = 1 .. size-1).
WindowSet build_windows(const TimeSeries& series, const InputConfig& cfg, const Scalers& scalers);

/// Index of the first validation sample for a chronological split.
std::size_t split_index(std::size_t length, double train_fraction);
std::pair<TimeSeries, TimeSeries> split_train_val(const TimeSeries& series, double train_fraction);

/// Linear interpolation onto a uniform grid over the raw time span. NaN rows
/// are dropped first; a resulting gap longer than kMaxGapSeconds is an error.
TimeSeries resample(const RawRecord& raw, double dt_target);

/// Throws ConfigError if the series cannot supply the channels of cfg.
void check_supports(const TimeSeries& series, const InputConfig& cfg);

inline constexpr std::array<std::string_view, 6> kCsvColumns = {
    "time_s", "u_a", "u_b", "temp_a_c", "temp_b_c", "theta_deg"};

RawRecord load_csv(const std::filesystem::path& path);
void save_csv(const TimeSeries& series, const std::filesystem::path& path);

}  // namespace hystdyn
