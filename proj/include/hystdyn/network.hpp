#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hystdyn/numerics.hpp"

namespace hystdyn {

enum class Gate : std::size_t { Forget = 0, Input = 1, Output = 2, Cell = 3 };
inline constexpr std::size_t kGateCount = 4;

/// Default widths of the LSTM and dense layers.
inline constexpr std::size_t kDefaultHidden = 300;
inline constexpr std::size_t kDefaultDenseWidth = 300;

struct LstmParams {
  std::array<Matrix, kGateCount> W;  // h x n
  std::array<Matrix, kGateCount> U;  // h x h
  std::array<Vector, kGateCount> b;  // h

  static LstmParams zeros(std::size_t n, std::size_t h);

  std::size_t input_dim() const noexcept { return W[0].cols(); }
  std::size_t hidden_dim() const noexcept { return W[0].rows(); }

  Matrix& w(Gate g) { return W[static_cast<std::size_t>(g)]; }
  Matrix& u(Gate g) { return U[static_cast<std::size_t>(g)]; }
  Vector& bias(Gate g) { return b[static_cast<std::size_t>(g)]; }
  const Matrix& w(Gate g) const { return W[static_cast<std::size_t>(g)]; }
  const Matrix& u(Gate g) const { return U[static_cast<std::size_t>(g)]; }
  const Vector& bias(Gate g) const { return b[static_cast<std::size_t>(g)]; }

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

/// ReLU layer followed by a single linear output node.
struct DenseParams {
  Matrix W1;  // width x h
  Vector b1;  // width
  Vector w2;  // width
  double b2 = 0.0;

  static DenseParams zeros(std::size_t h, std::size_t width);
  std::size_t width() const noexcept { return W1.rows(); }

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(std::size_t hidden);
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// One LSTM layer, one ReLU dense layer, one linear output. The same type holds
/// gradients.
struct LstmNetwork {
  LstmParams lstm;
  DenseParams dense;

  static LstmNetwork zeros(std::size_t n, std::size_t h, std::size_t width);
  /// Glorot-uniform weights, zero biases; b_f = 1 when forget_bias_one.
  static LstmNetwork initialize(std::size_t n, std::size_t h, std::size_t width, Rng& rng,
                                bool forget_bias_one = true);

  std::size_t input_dim() const noexcept { return lstm.input_dim(); }
  std::size_t hidden_dim() const noexcept { return lstm.hidden_dim(); }
  std::size_t dense_width() const noexcept { return dense.width(); }
  std::size_t parameter_count() const;

  friend bool operator==(const LstmNetwork&, const LstmNetwork&) = default;
};

using NetworkGradients = LstmNetwork;

struct TensorView {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> data;
};

struct ConstTensorView {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> data;
};

/// Every parameter tensor in a fixed order (W_f.., U_f.., b_f.., W1, b1, w2, b2).
std::vector<TensorView> tensors(LstmNetwork& net);
std::vector<ConstTensorView> tensors(const LstmNetwork& net);

/// Activations kept from a cell step for backpropagation.
struct CellCache {
  Vector x, h_prev, c_prev;
  Vector f, i, o, g;  // gate outputs; g is the candidate c~
  Vector c, tanh_c, h;
};

struct CellStep {
  LstmState state;
  CellCache cache;
};

/// One LSTM step. The output gate reads h(t-1) like the other gates.
CellStep cell_forward(std::span<const double> x, const LstmState& state, const LstmParams& p);

struct StepCache {
  CellCache cell;
  Vector z1;  // dense pre-activation
  Vector a1;  // relu(z1)
  double y = 0.0;
};

struct ForwardResult {
  Vector outputs;  // scaled theta-hat per step
  LstmState final_state;
  std::vector<StepCache> caches;
};

/// Dense head on top of an LSTM hidden vector. Fills z1/a1/y of cache.
double dense_forward(const DenseParams& d, std::span<const double> h, StepCache& cache);

ForwardResult forward(const LstmNetwork& net, std::span<const Vector> inputs,
                      const LstmState& initial);

/// Inference step without keeping caches beyond the call.
double predict_step(const LstmNetwork& net, std::span<const double> x, LstmState& state);

/// BPTT through a whole forward pass. d_outputs[t] is dLoss/dy_t.
NetworkGradients backward(const LstmNetwork& net, std::span<const StepCache> caches,
                          std::span<const double> d_outputs);

}  // namespace hystdyn
