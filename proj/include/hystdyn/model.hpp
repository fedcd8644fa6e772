#pragma once

#include <cstdint>

#include "hystdyn/datamodel.hpp"
#include "hystdyn/network.hpp"

namespace hystdyn {

/// Everything besides weights needed to apply a model to a new series.
struct ModelMeta {
  InputConfig input{1};
  Scalers scalers;
  std::uint64_t rng_seed = 0;
  double train_fraction = 0.67;
  double dt = kDefaultDt;

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct LstmModel {
  LstmNetwork net;
  ModelMeta meta;

  friend bool operator==(const LstmModel&, const LstmModel&) = default;
};

}  // namespace hystdyn
