#include "hystdyn/checkpoint.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <string>

#include "hystdyn/error.hpp"
#include "hystdyn/numerics.hpp"

namespace hystdyn {

using nlohmann::json;

std::string to_hex_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double from_hex_float(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError("checkpoint: bad number '" + s + "'");
  }
  return v;
}

namespace {

json encode_values(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(to_hex_float(v));
  return arr;
}

json encode_tensor(std::size_t rows, std::size_t cols, std::span<const double> values) {
  return {{"rows", rows}, {"cols", cols}, {"data", encode_values(values)}};
}

json encode_scaler(const AffineScaler& s) {
  return {{"min", to_hex_float(s.min())}, {"max", to_hex_float(s.max())}};
}

json encode_meta(const ModelMeta& meta, std::string_view model_type) {
  return {{"version", kCheckpointVersion},
          {"model_type", model_type},
          {"input_config_k", meta.input.k()},
          {"n", meta.input.window_dim()},
          {"scalers",
           {{"theta", encode_scaler(meta.scalers.theta)},
            {"temperature", encode_scaler(meta.scalers.temperature)}}},
          {"rng_seed", meta.rng_seed},
          {"rng", Rng::kGeneratorName},
          {"train_fraction", to_hex_float(meta.train_fraction)},
          {"dt", to_hex_float(meta.dt)}};
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ConfigError(std::string("checkpoint: missing '") + key + "' field");
  }
  return doc.at(key);
}

double hex_field(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_string()) throw DataError(std::string("checkpoint: '") + key + "' must be a string");
  return from_hex_float(v.get<std::string>());
}

AffineScaler decode_scaler(const json& j) {
  try {
    return AffineScaler(hex_field(j, "min"), hex_field(j, "max"));
  } catch (const DataError& e) {
    throw ConfigError(std::string("checkpoint scaler: ") + e.what());
  }
}

ModelMeta decode_meta(const json& doc) {
  const int version = field(doc, "version").get<int>();
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  ModelMeta meta;
  meta.input = InputConfig(field(doc, "input_config_k").get<int>());
  const auto n = field(doc, "n").get<std::size_t>();
  if (n != meta.input.window_dim()) {
    throw ConfigError("checkpoint: n=" + std::to_string(n) + " inconsistent with k=" +
                      std::to_string(meta.input.k()));
  }
  const json& sc = field(doc, "scalers");
  meta.scalers.theta = decode_scaler(field(sc, "theta"));
  meta.scalers.temperature = decode_scaler(field(sc, "temperature"));
  meta.rng_seed = field(doc, "rng_seed").get<std::uint64_t>();
  meta.train_fraction = hex_field(doc, "train_fraction");
  meta.dt = hex_field(doc, "dt");
  return meta;
}

void decode_tensor(const json& params, std::string_view name, std::size_t rows, std::size_t cols,
                   std::span<double> dest) {
  const json& t = field(params, std::string(name).c_str());
  if (field(t, "rows").get<std::size_t>() != rows || field(t, "cols").get<std::size_t>() != cols) {
    throw ConfigError("checkpoint: tensor " + std::string(name) + " has wrong shape");
  }
  const json& data = field(t, "data");
  if (!data.is_array() || data.size() != dest.size()) {
    throw ConfigError("checkpoint: tensor " + std::string(name) + " has wrong element count");
  }
  for (std::size_t i = 0; i < dest.size(); ++i) dest[i] = from_hex_float(data[i].get<std::string>());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const LstmModel& model, const std::filesystem::path& path) {
  if (model.net.input_dim() != model.meta.input.window_dim()) {
    throw ConfigError("save_checkpoint: network input size does not match k");
  }
  json doc = encode_meta(model.meta, "lstm");
  doc["h"] = model.net.hidden_dim();
  doc["dense_width"] = model.net.dense_width();
  json params = json::object();
  for (const auto& t : tensors(model.net)) {
    params[std::string(t.name)] = encode_tensor(t.rows, t.cols, t.data);
  }
  doc["params"] = std::move(params);
  write_json(doc, path);
}

void save_checkpoint(const LinearModel& model, const std::filesystem::path& path) {
  if (model.weights.size() != model.meta.input.window_dim()) {
    throw ConfigError("save_checkpoint: linear weights do not match k");
  }
  json doc = encode_meta(model.meta, "linear");
  doc["rank_deficient"] = model.rank_deficient;
  doc["params"] = {{"weights", encode_tensor(model.weights.size(), 1, model.weights)},
                   {"bias", encode_tensor(1, 1, {&model.bias, 1})}};
  write_json(doc, path);
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    const ModelMeta meta = decode_meta(doc);
    const std::string type = field(doc, "model_type").get<std::string>();
    const json& params = field(doc, "params");
    const std::size_t n = meta.input.window_dim();
    if (type == "lstm") {
      const auto h = field(doc, "h").get<std::size_t>();
      const auto width = field(doc, "dense_width").get<std::size_t>();
      if (h == 0 || width == 0) throw ConfigError("checkpoint: zero layer size");
      LstmModel model{LstmNetwork::zeros(n, h, width), meta};
      for (auto& t : tensors(model.net)) decode_tensor(params, t.name, t.rows, t.cols, t.data);
      return model;
    }
    if (type == "linear") {
      LinearModel model;
      model.meta = meta;
      model.weights.assign(n, 0.0);
      decode_tensor(params, "weights", n, 1, model.weights);
      decode_tensor(params, "bias", 1, 1, {&model.bias, 1});
      if (doc.contains("rank_deficient")) model.rank_deficient = doc["rank_deficient"].get<bool>();
      return model;
    }
    throw ConfigError("checkpoint: unknown model_type '" + type + "'");
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

LstmModel load_lstm_checkpoint(const std::filesystem::path& path) {
  AnyModel m = load_checkpoint(path);
  if (auto* lstm = std::get_if<LstmModel>(&m)) return std::move(*lstm);
  throw ConfigError(path.string() + " holds a linear model, expected an LSTM");
}

const ModelMeta& meta_of(const AnyModel& model) {
  return std::visit([](const auto& m) -> const ModelMeta& { return m.meta; }, model);
}

}  // namespace hystdyn
