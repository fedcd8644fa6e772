#include "hystdyn/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "hystdyn/error.hpp"

namespace hystdyn {

namespace {

// Relative pivot size below which the Gram matrix is treated as singular.
constexpr double kPivotTolerance = 1e-10;

// Lower-triangular Cholesky factor of a symmetric matrix, or nullopt when a
// pivot is not above relative_tolerance * max diagonal.
std::optional<Matrix> cholesky(const Matrix& a, double relative_tolerance) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double tol = relative_tolerance * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector cholesky_solve(const Matrix& l, const Vector& rhs) {
  const std::size_t n = l.rows();
  Vector z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
    z[i] = s / l(i, i);
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace

LinearModel fit_least_squares(std::span<const Vector> inputs, std::span<const double> targets,
                              const ModelMeta& meta) {
  if (inputs.size() != targets.size()) throw DimensionError("fit_least_squares: size mismatch");
  if (inputs.empty()) throw DataError("fit_least_squares: no windows");
  const std::size_t dim = inputs.front().size();
  const std::size_t p = dim + 1;  // augmented with the intercept column
  if (inputs.size() < p) {
    throw DataError("fit_least_squares: need at least " + std::to_string(p) + " windows, got " +
                    std::to_string(inputs.size()));
  }

  Matrix gram(p, p);
  Vector rhs(p, 0.0);
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    const Vector& x = inputs[r];
    if (x.size() != dim) throw DimensionError("fit_least_squares: ragged windows");
    for (std::size_t i = 0; i < p; ++i) {
      const double xi = i < dim ? x[i] : 1.0;
      rhs[i] += xi * targets[r];
      for (std::size_t j = 0; j <= i; ++j) {
        const double xj = j < dim ? x[j] : 1.0;
        gram(i, j) += xi * xj;
      }
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) gram(i, j) = gram(j, i);
  }

  LinearModel model;
  model.meta = meta;
  auto factor = cholesky(gram, kPivotTolerance);
  if (!factor) {
    model.rank_deficient = true;
    Matrix ridged = gram;
    for (std::size_t i = 0; i < p; ++i) ridged(i, i) += kRidgeFallback;
    factor = cholesky(ridged, 0.0);
    if (!factor) throw NumericalError("fit_least_squares: ridge-regularized system still singular");
  }
  const Vector sol = cholesky_solve(*factor, rhs);
  model.weights.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(dim));
  model.bias = sol[dim];

  // First-order optimality: A^T (A w - y).
  Vector grad(p, 0.0);
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    const double resid = predict_linear_scaled(model, inputs[r]) - targets[r];
    for (std::size_t i = 0; i < dim; ++i) grad[i] += inputs[r][i] * resid;
    grad[dim] += resid;
  }
  model.optimality_residual = 0.0;
  for (double g : grad) model.optimality_residual = std::max(model.optimality_residual, std::abs(g));
  return model;
}

LinearModel fit_least_squares(const WindowSet& windows, const ModelMeta& meta) {
  return fit_least_squares(windows.inputs, windows.targets, meta);
}

double predict_linear_scaled(const LinearModel& model, std::span<const double> window) {
  if (window.size() != model.weights.size()) {
    throw DimensionError("predict_linear: window has " + std::to_string(window.size()) +
                         " entries, model expects " + std::to_string(model.weights.size()));
  }
  return model.bias + dot(model.weights, window);
}

double predict_linear(const LinearModel& model, std::span<const double> window) {
  return model.meta.scalers.theta.descale(predict_linear_scaled(model, window));
}

LinearModel fit_baseline(const TimeSeries& series, const InputConfig& input, double train_fraction) {
  check_supports(series, input);
  const std::size_t n_train = split_index(series.size(), train_fraction);
  const TimeSeries train = series.slice(0, n_train);
  ModelMeta meta;
  meta.input = input;
  meta.scalers = fit_scalers(train, input);
  meta.train_fraction = train_fraction;
  meta.dt = series.dt();
  return fit_least_squares(build_windows(train, input, meta.scalers), meta);
}

}  // namespace hystdyn
