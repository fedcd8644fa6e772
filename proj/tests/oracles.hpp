#pragma once

// Test-only reference computations. None of these call into the code paths
// they are used to check.

#include <cmath>
#include <span>
#include <vector>

#include "hystdyn/network.hpp"

namespace oracles {

using hystdyn::LstmNetwork;
using hystdyn::Vector;

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Scalar re-evaluation of the network, straight from the cell equations.
inline Vector naive_forward(const LstmNetwork& net, const std::vector<Vector>& xs) {
  const std::size_t n = net.input_dim(), h = net.hidden_dim(), d = net.dense_width();
  Vector hs(h, 0.0), cs(h, 0.0), out;
  for (const Vector& x : xs) {
    Vector gate[4];
    for (std::size_t g = 0; g < 4; ++g) {
      gate[g].assign(h, 0.0);
      for (std::size_t r = 0; r < h; ++r) {
        double z = net.lstm.b[g][r];
        for (std::size_t c = 0; c < n; ++c) z += net.lstm.W[g](r, c) * x[c];
        for (std::size_t c = 0; c < h; ++c) z += net.lstm.U[g](r, c) * hs[c];
        gate[g][r] = g == 3 ? std::tanh(z) : logistic(z);
      }
    }
    for (std::size_t r = 0; r < h; ++r) {
      cs[r] = gate[0][r] * cs[r] + gate[1][r] * gate[3][r];
      hs[r] = gate[2][r] * std::tanh(cs[r]);
    }
    double y = net.dense.b2;
    for (std::size_t r = 0; r < d; ++r) {
      double z = net.dense.b1[r];
      for (std::size_t c = 0; c < h; ++c) z += net.dense.W1(r, c) * hs[c];
      y += net.dense.w2[r] * (z > 0.0 ? z : 0.0);
    }
    out.push_back(y);
  }
  return out;
}

/// Sum of squared errors against targets, evaluated with naive_forward.
inline double sse_loss(const LstmNetwork& net, const std::vector<Vector>& xs, const Vector& targets) {
  const Vector y = naive_forward(net, xs);
  double acc = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) acc += (y[t] - targets[t]) * (y[t] - targets[t]);
  return acc;
}

/// Central finite difference of sse_loss with respect to every parameter, in
/// the order of hystdyn::tensors().
inline std::vector<Vector> finite_difference_gradient(LstmNetwork net, const std::vector<Vector>& xs,
                                                      const Vector& targets, double eps) {
  std::vector<Vector> grads;
  for (auto& t : hystdyn::tensors(net)) {
    Vector g(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const double saved = t.data[i];
      t.data[i] = saved + eps;
      const double up = sse_loss(net, xs, targets);
      t.data[i] = saved - eps;
      const double down = sse_loss(net, xs, targets);
      t.data[i] = saved;
      g[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracles
