#pragma once

#include <filesystem>
#include <variant>

#include "hystdyn/baseline.hpp"
#include "hystdyn/model.hpp"

namespace hystdyn {

inline constexpr int kCheckpointVersion = 1;

using AnyModel = std::variant<LstmModel, LinearModel>;

// Checkpoints are JSON. Every floating point value is stored as a C99 hex-float
// string, so a load reproduces the saved doubles exactly.
void save_checkpoint(const LstmModel& model, const std::filesystem::path& path);
void save_checkpoint(const LinearModel& model, const std::filesystem::path& path);

AnyModel load_checkpoint(const std::filesystem::path& path);
LstmModel load_lstm_checkpoint(const std::filesystem::path& path);

const ModelMeta& meta_of(const AnyModel& model);

std::string to_hex_float(double v);
double from_hex_float(const std::string& s);

}  // namespace hystdyn
