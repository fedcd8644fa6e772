#include <doctest.h>

#include <cmath>

#include "hystdyn/baseline.hpp"
#include "hystdyn/error.hpp"
#include "hystdyn/evaluation.hpp"
#include "hystdyn/plant.hpp"

using namespace hystdyn;

namespace {

ModelMeta meta_for(int k, AffineScaler theta = AffineScaler(0.0, 1.0)) {
  ModelMeta m;
  m.input = InputConfig(k);
  m.scalers.theta = theta;
  return m;
}

double max_residual(const LinearModel& m, const std::vector<Vector>& xs, const Vector& ys) {
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    worst = std::max(worst, std::abs(predict_linear_scaled(m, xs[i]) - ys[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("exact linear data is recovered") {
  // theta = 2 u + 1 with the two history channels held constant; those
  // columns duplicate the intercept, so only the slope is identifiable.
  Rng rng(1);
  std::vector<Vector> xs;
  Vector ys;
  for (int i = 0; i < 200; ++i) {
    const double u = rng.uniform();
    xs.push_back({u, 0.25, 0.5});
    ys.push_back(2.0 * u + 1.0);
  }
  const LinearModel m = fit_least_squares(xs, ys, meta_for(1));
  CHECK(m.weights[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.bias + 0.25 * m.weights[1] + 0.5 * m.weights[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(max_residual(m, xs, ys) < 1e-9);
  CHECK(m.optimality_residual < 1e-6);
}

TEST_CASE("full-rank random design recovers exact coefficients") {
  Rng rng(2);
  const Vector w = {0.3, -1.2, 0.7, 2.0, -0.4};
  std::vector<Vector> xs;
  Vector ys;
  for (int i = 0; i < 100; ++i) {
    Vector x(5);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    double y = -0.6;
    for (std::size_t j = 0; j < 5; ++j) y += w[j] * x[j];
    xs.push_back(x);
    ys.push_back(y);
  }
  const LinearModel m = fit_least_squares(xs, ys, meta_for(3));
  CHECK_FALSE(m.rank_deficient);
  for (std::size_t j = 0; j < 5; ++j) CHECK(m.weights[j] == doctest::Approx(w[j]).epsilon(1e-10));
  CHECK(m.bias == doctest::Approx(-0.6).epsilon(1e-10));
}

TEST_CASE("duplicate columns raise the rank-deficiency flag") {
  Rng rng(3);
  std::vector<Vector> xs;
  Vector ys;
  for (int i = 0; i < 50; ++i) {
    const double u = rng.uniform();
    const double th = rng.uniform();
    xs.push_back({u, u, th});
    ys.push_back(0.5 * u + 0.1 * th);
  }
  const LinearModel m = fit_least_squares(xs, ys, meta_for(1));
  CHECK(m.rank_deficient);
  CHECK(m.weights[0] + m.weights[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(m.optimality_residual < 1e-6);
}

TEST_CASE("fit preconditions") {
  std::vector<Vector> xs = {{0.1, 0.2, 0.3}, {0.2, 0.1, 0.4}};
  Vector ys = {0.0, 1.0};
  CHECK_THROWS_AS(fit_least_squares(xs, ys, meta_for(1)), DataError);
  xs.push_back({0.3, 0.1, 0.2});
  xs.push_back({0.3, 0.1});
  ys.push_back(0.5);
  ys.push_back(0.5);
  CHECK_THROWS_AS(fit_least_squares(xs, ys, meta_for(1)), DimensionError);
}

TEST_CASE("prediction semantics") {
  LinearModel m;
  m.meta = meta_for(1, AffineScaler(-45.0, 45.0));
  m.weights = {0.0, 0.0, 0.0};
  m.bias = 0.75;
  CHECK(predict_linear_scaled(m, Vector{0.3, 0.9, 0.1}) == 0.75);
  CHECK(predict_linear(m, Vector{0.3, 0.9, 0.1}) == doctest::Approx(22.5));

  m.bias = 0.0;
  m.weights = {0.4, -1.5, 2.0};
  const Vector x = {0.2, 0.6, -0.3};
  Vector ax = x;
  for (double& v : ax) v *= 3.5;
  CHECK(predict_linear_scaled(m, ax) == doctest::Approx(3.5 * predict_linear_scaled(m, x)));
  CHECK_THROWS_AS(predict_linear_scaled(m, Vector{1.0, 2.0}), DimensionError);

  Rng rng(5);
  m.bias = 0.125;
  for (int i = 0; i < 20; ++i) {
    Vector r(3);
    for (double& v : r) v = rng.uniform(-2.0, 2.0);
    const double expect = m.weights[0] * r[0] + m.weights[1] * r[1] + m.weights[2] * r[2] + m.bias;
    CHECK(predict_linear_scaled(m, r) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("normal equations satisfy first-order optimality on babble data") {
  const TimeSeries s =
      plant::babble(plant::PlantConfig{}, plant::BabbleMode::Bidirectional, 300.0, 21).series;
  for (int k = 1; k <= 4; ++k) {
    CAPTURE(k);
    const LinearModel m = fit_baseline(s, InputConfig(k), 0.67);
    CHECK(m.weights.size() == InputConfig(k).window_dim());
    CHECK(m.optimality_residual < 1e-6);
  }
}

TEST_CASE("linear rollout averages the hysteresis branches") {
  // Park the limb at the same duty and temperature twice: once approached
  // from cold (martensite, limb near rest) and once after overheating
  // (austenite retained above M_s, limb bent). A linear rollout has a single
  // fixed point for a given (u, T), so it must land on the same angle both
  // times while the plant sits on two different branches.
  const plant::PlantParams p;
  const TimeSeries train_data =
      plant::babble(plant::PlantConfig{}, plant::BabbleMode::Unidirectional, 1800.0, 31).series;
  const LinearModel m = fit_baseline(train_data, InputConfig(2), 0.67);
  LinearPredictor pred(m);

  const double t_park = 60.0;  // between M_s and A_s
  const double u_park = (t_park - p.ambient_c) * p.convection * p.resistance_ohm /
                        (p.supply_v * p.supply_v);
  auto park = [&](int overheat_steps) {
    plant::PlantState st = plant::PlantState::at_rest(p);
    std::vector<double> ua, zeros, ta, tb, th;
    for (int i = 0; i < overheat_steps + 6000; ++i) {
      const double u = i < overheat_steps ? 1.0 : u_park;
      st = plant::plant_step(st, u, 0.0, p);
      ua.push_back(u);
      zeros.push_back(0.0);
      ta.push_back(st.a.temp);
      tb.push_back(st.b.temp);
      th.push_back(st.theta);
    }
    const TimeSeries s(p.dt, 0.0, ua, zeros, ta, tb, th, true);
    const EvalReport r = rollout(pred, s, 1);
    return r.trajectory.back();
  };
  const TrajectoryPoint from_cold = park(0);
  const TrajectoryPoint from_hot = park(400);

  CHECK(std::abs(from_hot.theta_true_deg - from_cold.theta_true_deg) > 30.0);
  CHECK(std::abs(from_hot.theta_pred_deg - from_cold.theta_pred_deg) < 1e-3);
  const double worst = std::max(std::abs(from_hot.theta_pred_deg - from_hot.theta_true_deg),
                                std::abs(from_cold.theta_pred_deg - from_cold.theta_true_deg));
  CHECK(worst > 15.0);
}
