#include "hystdyn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <string>

#include "hystdyn/error.hpp"

namespace hystdyn {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(std::string("train config: ") + msg);
  };
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(epsilon > 0.0, "epsilon must be positive");
  require(weight_decay_l2 >= 0.0, "weight_decay_l2 must be non-negative");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size_steps >= 1, "batch_size_steps must be >= 1");
  require(bptt_length >= 1, "bptt_length must be >= 1");
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
  require(hidden_size >= 1 && dense_width >= 1, "layer sizes must be positive");
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open train config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("train config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "beta1") cfg.beta1 = value.get<double>();
      else if (key == "beta2") cfg.beta2 = value.get<double>();
      else if (key == "epsilon") cfg.epsilon = value.get<double>();
      else if (key == "weight_decay_l2") cfg.weight_decay_l2 = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "batch_size_steps") cfg.batch_size_steps = value.get<std::size_t>();
      else if (key == "bptt_length") cfg.bptt_length = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "train_fraction") cfg.train_fraction = value.get<double>();
      else if (key == "hidden_size") cfg.hidden_size = value.get<std::size_t>();
      else if (key == "dense_width") cfg.dense_width = value.get<std::size_t>();
      else if (key == "forget_bias_one") cfg.forget_bias_one = value.get<bool>();
      else throw ConfigError("train config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("train config " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------- Adam

AdamState AdamState::for_shapes(std::span<const std::size_t> sizes) {
  AdamState s;
  for (std::size_t n : sizes) {
    s.m.emplace_back(n, 0.0);
    s.v.emplace_back(n, 0.0);
  }
  return s;
}

AdamState AdamState::for_network(const LstmNetwork& net) {
  std::vector<std::size_t> sizes;
  for (const auto& t : tensors(net)) sizes.push_back(t.data.size());
  return for_shapes(sizes);
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: tensor count mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_corr = 1.0 - std::pow(cfg.beta1, t);
  const double v_corr = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw DimensionError("adam_step: shape mismatch in tensor " + std::to_string(k));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / m_corr;
      const double v_hat = v[i] / v_corr;
      p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      if (cfg.weight_decay_l2 > 0.0) p[i] -= cfg.learning_rate * cfg.weight_decay_l2 * p[i];
    }
  }
}

void adam_step(LstmNetwork& net, const NetworkGradients& grads, AdamState& state,
               const TrainConfig& cfg) {
  std::vector<std::span<double>> p;
  std::vector<std::span<const double>> g;
  for (auto& t : tensors(net)) p.push_back(t.data);
  for (const auto& t : tensors(grads)) g.push_back(t.data);
  adam_step(p, g, state, cfg);
}

// ------------------------------------------------------------------- metrics

double mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw DimensionError("mse: length mismatch");
  if (predictions.empty()) throw DataError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    acc += e * e;
  }
  return acc / static_cast<double>(predictions.size());
}

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  return std::sqrt(mse(predictions, targets));
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_mse,val_mse,val_rmse_deg\n";
  char buf[128];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_mse, e.val_mse,
                  e.val_rmse_deg);
    out << buf;
  }
}

// ------------------------------------------------------------ batch gradient

namespace {

void accumulate(NetworkGradients& into, const NetworkGradients& from) {
  auto dst = tensors(into);
  const auto src = tensors(from);
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t i = 0; i < dst[k].data.size(); ++i) dst[k].data[i] += src[k].data[i];
  }
}

struct SubsequenceResult {
  NetworkGradients grad;
  double sq_error = 0.0;
};

SubsequenceResult subsequence_gradient(const LstmNetwork& net, const WindowSet& windows,
                                       const Subsequence& sub, double loss_scale) {
  if (sub.begin + sub.length > windows.size()) throw std::out_of_range("subsequence out of range");
  std::span<const Vector> inputs(windows.inputs.data() + sub.begin, sub.length);
  std::span<const double> targets(windows.targets.data() + sub.begin, sub.length);
  ForwardResult fwd = forward(net, inputs, LstmState::zeros(net.hidden_dim()));
  Vector dy(sub.length);
  SubsequenceResult r;
  for (std::size_t t = 0; t < sub.length; ++t) {
    const double e = fwd.outputs[t] - targets[t];
    r.sq_error += e * e;
    dy[t] = 2.0 * e * loss_scale;
  }
  r.grad = backward(net, fwd.caches, dy);
  return r;
}

std::size_t total_steps(std::span<const Subsequence> batch) {
  std::size_t steps = 0;
  for (const auto& s : batch) steps += s.length;
  if (steps == 0) throw DataError("batch_gradient: empty batch");
  return steps;
}

BatchGradient reduce(const LstmNetwork& net, std::vector<SubsequenceResult>& parts,
                     std::size_t steps) {
  BatchGradient out;
  out.steps = steps;
  out.grad = LstmNetwork::zeros(net.input_dim(), net.hidden_dim(), net.dense_width());
  double sq = 0.0;
  for (auto& p : parts) {
    accumulate(out.grad, p.grad);
    sq += p.sq_error;
  }
  out.loss = sq / static_cast<double>(steps);
  return out;
}

}  // namespace

BatchGradient batch_gradient(const LstmNetwork& net, const WindowSet& windows,
                             std::span<const Subsequence> batch) {
  const std::size_t steps = total_steps(batch);
  const double scale = 1.0 / static_cast<double>(steps);
  std::vector<SubsequenceResult> parts(batch.size());
  const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static) if (count > 1)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    parts[idx] = subsequence_gradient(net, windows, batch[idx], scale);
  }
  return reduce(net, parts, steps);
}

namespace reference {

BatchGradient batch_gradient(const LstmNetwork& net, const WindowSet& windows,
                             std::span<const Subsequence> batch) {
  const std::size_t steps = total_steps(batch);
  const double scale = 1.0 / static_cast<double>(steps);
  std::vector<SubsequenceResult> parts;
  parts.reserve(batch.size());
  for (const auto& sub : batch) parts.push_back(subsequence_gradient(net, windows, sub, scale));
  return reduce(net, parts, steps);
}

}  // namespace reference

// --------------------------------------------------------------------- train

namespace {

double teacher_forced_mse(const LstmNetwork& net, const WindowSet& windows) {
  LstmState state = LstmState::zeros(net.hidden_dim());
  double acc = 0.0;
  for (std::size_t t = 0; t < windows.size(); ++t) {
    const double e = predict_step(net, windows.inputs[t], state) - windows.targets[t];
    acc += e * e;
  }
  return acc / static_cast<double>(windows.size());
}

}  // namespace

TrainResult train(const TimeSeries& dataset, const TrainConfig& cfg, const InputConfig& input,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check_supports(dataset, input);
  const std::size_t n_train = split_index(dataset.size(), cfg.train_fraction);
  const TimeSeries train_part = dataset.slice(0, n_train);

  ModelMeta meta;
  meta.input = input;
  meta.scalers = fit_scalers(train_part, input);
  meta.rng_seed = cfg.seed;
  meta.train_fraction = cfg.train_fraction;
  meta.dt = dataset.dt();

  const WindowSet train_windows = build_windows(train_part, input, meta.scalers);
  // Validation targets start right after the split; the first window reads
  // the last recorded training sample as theta(t-1).
  const WindowSet val_windows =
      build_windows(dataset, input, meta.scalers, n_train, dataset.size());

  std::vector<Subsequence> subsequences;
  for (std::size_t b = 0; b < train_windows.size(); b += cfg.bptt_length) {
    subsequences.push_back({b, std::min(cfg.bptt_length, train_windows.size() - b)});
  }
  if (subsequences.empty()) throw DataError("train: not enough data for one subsequence");
  const std::size_t per_batch = std::max<std::size_t>(1, cfg.batch_size_steps / cfg.bptt_length);

  Rng rng(cfg.seed);
  TrainResult result;
  result.train_source_begin = train_windows.source_begin;
  result.train_source_end = train_windows.source_end;
  result.model = {LstmNetwork::initialize(input.window_dim(), cfg.hidden_size, cfg.dense_width,
                                          rng, cfg.forget_bias_one),
                  meta};
  LstmNetwork& net = result.model.net;
  AdamState adam = AdamState::for_network(net);
  const double theta_range = meta.scalers.theta.range();
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<Subsequence> order = subsequences;
    rng.shuffle(order);
    double sq_sum = 0.0;
    std::size_t step_sum = 0;
    for (std::size_t b = 0; b < order.size(); b += per_batch) {
      const std::size_t len = std::min(per_batch, order.size() - b);
      BatchGradient bg = batch_gradient(net, train_windows, {order.data() + b, len});
      if (!std::isfinite(bg.loss)) {
        throw NumericalError("training diverged: non-finite loss in epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(b / per_batch + 1));
      }
      sq_sum += bg.loss * static_cast<double>(bg.steps);
      step_sum += bg.steps;
      adam_step(net, bg.grad, adam, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = sq_sum / static_cast<double>(step_sum);
    rec.val_mse = teacher_forced_mse(net, val_windows);
    if (!std::isfinite(rec.val_mse)) {
      throw NumericalError("training diverged: non-finite validation loss in epoch " +
                           std::to_string(epoch));
    }
    rec.val_rmse_deg = std::sqrt(rec.val_mse) * theta_range;
    result.history.epochs.push_back(rec);
    if (rec.val_mse < best_val) {
      best_val = rec.val_mse;
      result.best_model = result.model;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace hystdyn
