#pragma once

#include <span>

#include "hystdyn/datamodel.hpp"
#include "hystdyn/model.hpp"

namespace hystdyn {

/// Ridge added to the normal equations when they are (numerically) singular.
inline constexpr double kRidgeFallback = 1e-9;

/// theta(t) = w . X(t) + b, in the same scaled units the LSTM sees.
struct LinearModel {
  Vector weights;
  double bias = 0.0;
  ModelMeta meta;
  /// Set when the design matrix was rank deficient and the ridge term was used.
  bool rank_deficient = false;
  /// max |A^T (A w - y)| at the solution, A = [X, 1].
  double optimality_residual = 0.0;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Ordinary least squares via the normal equations, with kRidgeFallback on
/// rank deficiency. meta is copied into the result.
LinearModel fit_least_squares(std::span<const Vector> inputs, std::span<const double> targets,
                              const ModelMeta& meta);
LinearModel fit_least_squares(const WindowSet& windows, const ModelMeta& meta);

/// Scaled output w . x + b.
double predict_linear_scaled(const LinearModel& model, std::span<const double> window);
/// Prediction in degrees.
double predict_linear(const LinearModel& model, std::span<const double> window);

/// Fit on the chronological training split of series, as the LSTM is trained.
LinearModel fit_baseline(const TimeSeries& series, const InputConfig& input, double train_fraction);

}  // namespace hystdyn
