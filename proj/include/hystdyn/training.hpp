#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "hystdyn/datamodel.hpp"
#include "hystdyn/model.hpp"
#include "hystdyn/network.hpp"

namespace hystdyn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled L2 applied after each Adam step. Off by default.
  double weight_decay_l2 = 0.0;
  int epochs = 20;
  /// Time steps per gradient update; split into bptt_length subsequences.
  std::size_t batch_size_steps = 100;
  std::size_t bptt_length = 50;
  std::uint64_t seed = 1;
  double train_fraction = 0.67;
  std::size_t hidden_size = kDefaultHidden;
  std::size_t dense_width = kDefaultDenseWidth;
  bool forget_bias_one = true;

  void validate() const;
};

TrainConfig load_train_config(const std::filesystem::path& path);

struct AdamState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  std::uint64_t step = 0;

  /// Zero moments shaped like the given tensors.
  static AdamState for_shapes(std::span<const std::size_t> sizes);
  static AdamState for_network(const LstmNetwork& net);
};

/// One Adam update with bias correction over a list of parameter tensors.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const TrainConfig& cfg);
void adam_step(LstmNetwork& net, const NetworkGradients& grads, AdamState& state,
               const TrainConfig& cfg);

double mse(std::span<const double> predictions, std::span<const double> targets);
double rmse(std::span<const double> predictions, std::span<const double> targets);

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;  // scaled units
  double val_mse = 0.0;    // scaled units
  double val_rmse_deg = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);

struct TrainResult {
  LstmModel model;       // after the final epoch
  LstmModel best_model;  // lowest validation MSE
  int best_epoch = 0;
  TrainHistory history;
  /// Range of dataset samples read by gradient updates.
  std::size_t train_source_begin = 0;
  std::size_t train_source_end = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Chronological train/validation split, Adam on scaled MSE over shuffled
/// BPTT subsequences, teacher-forced validation after every epoch.
TrainResult train(const TimeSeries& dataset, const TrainConfig& cfg, const InputConfig& input,
                  const EpochCallback& on_epoch = {});

/// Mean loss and summed gradients for one batch of subsequences. Each
/// subsequence starts from a zero state. Subsequences are evaluated in
/// parallel and reduced in index order, so results do not depend on the
/// thread count.
struct BatchGradient {
  NetworkGradients grad;
  double loss = 0.0;  // MSE over all steps in the batch
  std::size_t steps = 0;
};

struct Subsequence {
  std::size_t begin;  // index into the WindowSet
  std::size_t length;
};

BatchGradient batch_gradient(const LstmNetwork& net, const WindowSet& windows,
                             std::span<const Subsequence> batch);

namespace reference {
/// Serial version of batch_gradient, used to check the parallel path.
BatchGradient batch_gradient(const LstmNetwork& net, const WindowSet& windows,
                             std::span<const Subsequence> batch);
}  // namespace reference

}  // namespace hystdyn
