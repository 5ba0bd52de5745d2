#pragma once

#include <filesystem>

#include <json.hpp>

#include "ratepred/nn/tensor.hpp"

namespace ratepred::nn {

inline constexpr int kModelSchemaVersion = 1;

/// {"schema_version", "model_config", "params": {path: {"shape", "data"}}}.
/// Doubles are written in shortest round-trip form, so loading reproduces
/// every value bit-for-bit.
nlohmann::json params_to_json(const ParamStore& params, const nlohmann::json& model_config);

/// Rebuilds a store from a model document; returns the embedded model_config.
ParamStore params_from_json(const nlohmann::json& doc, nlohmann::json* model_config = nullptr);

void save_model(const std::filesystem::path& file, const ParamStore& params,
                const nlohmann::json& model_config);
ParamStore load_model(const std::filesystem::path& file, nlohmann::json* model_config = nullptr);

}  // namespace ratepred::nn
