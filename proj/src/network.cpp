#include "hystdyn/network.hpp"

#include <algorithm>
#include <string>

#include "hystdyn/error.hpp"
#include "hystdyn/kernels.hpp"

namespace hystdyn {

LstmParams LstmParams::zeros(std::size_t n, std::size_t h) {
  LstmParams p;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    p.W[g] = Matrix(h, n);
    p.U[g] = Matrix(h, h);
    p.b[g] = Vector(h, 0.0);
  }
  return p;
}

DenseParams DenseParams::zeros(std::size_t h, std::size_t width) {
  return {Matrix(width, h), Vector(width, 0.0), Vector(width, 0.0), 0.0};
}

LstmState LstmState::zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }

LstmNetwork LstmNetwork::zeros(std::size_t n, std::size_t h, std::size_t width) {
  if (n == 0 || h == 0 || width == 0) throw DimensionError("network dimensions must be positive");
  return {LstmParams::zeros(n, h), DenseParams::zeros(h, width)};
}

LstmNetwork LstmNetwork::initialize(std::size_t n, std::size_t h, std::size_t width, Rng& rng,
                                    bool forget_bias_one) {
  LstmNetwork net = zeros(n, h, width);
  for (std::size_t g = 0; g < kGateCount; ++g) {
    net.lstm.W[g] = glorot_uniform(rng, h, n);
    net.lstm.U[g] = glorot_uniform(rng, h, h);
  }
  if (forget_bias_one) net.lstm.bias(Gate::Forget).assign(h, 1.0);
  net.dense.W1 = glorot_uniform(rng, width, h);
  Matrix out = glorot_uniform(rng, 1, width);
  net.dense.w2.assign(out.values().begin(), out.values().end());
  return net;
}

std::size_t LstmNetwork::parameter_count() const {
  std::size_t count = 0;
  for (const auto& t : tensors(*this)) count += t.data.size();
  return count;
}

namespace {

constexpr std::array<std::string_view, kGateCount> kWNames = {"W_f", "W_i", "W_o", "W_c"};
constexpr std::array<std::string_view, kGateCount> kUNames = {"U_f", "U_i", "U_o", "U_c"};
constexpr std::array<std::string_view, kGateCount> kBNames = {"b_f", "b_i", "b_o", "b_c"};

template <typename View, typename Net>
std::vector<View> collect(Net& net) {
  std::vector<View> out;
  out.reserve(3 * kGateCount + 4);
  for (std::size_t g = 0; g < kGateCount; ++g) {
    auto& m = net.lstm.W[g];
    out.push_back({kWNames[g], m.rows(), m.cols(), m.values()});
  }
  for (std::size_t g = 0; g < kGateCount; ++g) {
    auto& m = net.lstm.U[g];
    out.push_back({kUNames[g], m.rows(), m.cols(), m.values()});
  }
  for (std::size_t g = 0; g < kGateCount; ++g) {
    auto& v = net.lstm.b[g];
    out.push_back({kBNames[g], v.size(), 1, v});
  }
  out.push_back({"W1", net.dense.W1.rows(), net.dense.W1.cols(), net.dense.W1.values()});
  out.push_back({"b1", net.dense.b1.size(), 1, net.dense.b1});
  out.push_back({"w2", net.dense.w2.size(), 1, net.dense.w2});
  out.push_back({"b2", 1, 1, {&net.dense.b2, 1}});
  return out;
}

void check_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

std::vector<TensorView> tensors(LstmNetwork& net) { return collect<TensorView>(net); }
std::vector<ConstTensorView> tensors(const LstmNetwork& net) {
  return collect<ConstTensorView>(net);
}

CellStep cell_forward(std::span<const double> x, const LstmState& state, const LstmParams& p) {
  const std::size_t h = p.hidden_dim();
  check_dim(x.size() == p.input_dim(), "cell_forward: input has " + std::to_string(x.size()) +
                                           " features, expected " + std::to_string(p.input_dim()));
  check_dim(state.h.size() == h && state.c.size() == h, "cell_forward: state size mismatch");

  CellStep step;
  CellCache& k = step.cache;
  k.x.assign(x.begin(), x.end());
  k.h_prev = state.h;
  k.c_prev = state.c;

  std::array<Vector*, kGateCount> pre = {&k.f, &k.i, &k.o, &k.g};
  for (std::size_t g = 0; g < kGateCount; ++g) {
    Vector& z = *pre[g];
    z = p.b[g];
    kernels::gemv_acc(p.W[g], x, z);
    kernels::gemv_acc(p.U[g], state.h, z);
  }
  sigmoid_inplace(k.f);
  sigmoid_inplace(k.i);
  sigmoid_inplace(k.o);
  tanh_inplace(k.g);

  k.c.resize(h);
  k.tanh_c.resize(h);
  k.h.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    k.c[j] = k.f[j] * k.c_prev[j] + k.i[j] * k.g[j];
    k.tanh_c[j] = tanh_act(k.c[j]);
    k.h[j] = k.o[j] * k.tanh_c[j];
  }
  step.state = {k.h, k.c};
  return step;
}

double dense_forward(const DenseParams& d, std::span<const double> h, StepCache& cache) {
  check_dim(h.size() == d.W1.cols(), "dense_forward: hidden size mismatch");
  cache.z1 = d.b1;
  kernels::gemv_acc(d.W1, h, cache.z1);
  cache.a1 = cache.z1;
  relu_inplace(cache.a1);
  cache.y = d.b2 + dot(d.w2, cache.a1);
  return cache.y;
}

ForwardResult forward(const LstmNetwork& net, std::span<const Vector> inputs,
                      const LstmState& initial) {
  ForwardResult result;
  result.outputs.reserve(inputs.size());
  result.caches.reserve(inputs.size());
  LstmState state = initial;
  for (const Vector& x : inputs) {
    StepCache sc;
    CellStep cs = cell_forward(x, state, net.lstm);
    state = std::move(cs.state);
    sc.cell = std::move(cs.cache);
    result.outputs.push_back(dense_forward(net.dense, sc.cell.h, sc));
    result.caches.push_back(std::move(sc));
  }
  result.final_state = std::move(state);
  return result;
}

double predict_step(const LstmNetwork& net, std::span<const double> x, LstmState& state) {
  CellStep cs = cell_forward(x, state, net.lstm);
  StepCache sc;
  const double y = dense_forward(net.dense, cs.state.h, sc);
  state = std::move(cs.state);
  return y;
}

NetworkGradients backward(const LstmNetwork& net, std::span<const StepCache> caches,
                          std::span<const double> d_outputs) {
  check_dim(caches.size() == d_outputs.size(), "backward: " + std::to_string(caches.size()) +
                                                   " caches but " +
                                                   std::to_string(d_outputs.size()) + " gradients");
  const std::size_t n = net.input_dim();
  const std::size_t h = net.hidden_dim();
  const std::size_t width = net.dense_width();
  NetworkGradients grad = LstmNetwork::zeros(n, h, width);

  Vector dh_next(h, 0.0), dc_next(h, 0.0);
  Vector dz1(width), dh(h), dc(h);
  std::array<Vector, kGateCount> dz;
  for (auto& v : dz) v.resize(h);

  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache& sc = caches[t];
    const CellCache& k = sc.cell;
    check_dim(k.x.size() == n && k.h.size() == h && sc.z1.size() == width,
              "backward: cache does not match network dimensions");
    const double dy = d_outputs[t];

    // Output node and ReLU layer.
    grad.dense.b2 += dy;
    kernels::axpy(dy, sc.a1, grad.dense.w2);
    for (std::size_t j = 0; j < width; ++j) {
      dz1[j] = sc.z1[j] > 0.0 ? dy * net.dense.w2[j] : 0.0;
    }
    kernels::ger(dz1, k.h, grad.dense.W1);
    kernels::axpy(1.0, dz1, grad.dense.b1);

    dh = dh_next;
    kernels::gemv_t_acc(net.dense.W1, dz1, dh);

    // h = o * tanh(c), c = f * c_prev + i * g.
    Vector& dzf = dz[static_cast<std::size_t>(Gate::Forget)];
    Vector& dzi = dz[static_cast<std::size_t>(Gate::Input)];
    Vector& dzo = dz[static_cast<std::size_t>(Gate::Output)];
    Vector& dzg = dz[static_cast<std::size_t>(Gate::Cell)];
    for (std::size_t j = 0; j < h; ++j) {
      const double d_o = dh[j] * k.tanh_c[j];
      dc[j] = dh[j] * k.o[j] * (1.0 - k.tanh_c[j] * k.tanh_c[j]) + dc_next[j];
      const double d_f = dc[j] * k.c_prev[j];
      const double d_i = dc[j] * k.g[j];
      const double d_g = dc[j] * k.i[j];
      dzf[j] = d_f * k.f[j] * (1.0 - k.f[j]);
      dzi[j] = d_i * k.i[j] * (1.0 - k.i[j]);
      dzo[j] = d_o * k.o[j] * (1.0 - k.o[j]);
      dzg[j] = d_g * (1.0 - k.g[j] * k.g[j]);
      dc_next[j] = dc[j] * k.f[j];
    }

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t g = 0; g < kGateCount; ++g) {
      kernels::ger(dz[g], k.x, grad.lstm.W[g]);
      kernels::ger(dz[g], k.h_prev, grad.lstm.U[g]);
      kernels::axpy(1.0, dz[g], grad.lstm.b[g]);
      kernels::gemv_t_acc(net.lstm.U[g], dz[g], dh_next);
    }
  }
  return grad;
}

}  // namespace hystdyn
