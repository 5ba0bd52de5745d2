#include "ratepred/nn/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace ratepred::nn {

nlohmann::json params_to_json(const ParamStore& params, const nlohmann::json& model_config) {
  nlohmann::json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["model_config"] = model_config;
  nlohmann::json& out = doc["params"] = nlohmann::json::object();
  for (const auto& [path, e] : params) {
    out[path] = {{"shape", e.value.shape()},
                 {"data", std::vector<double>(e.value.data().begin(), e.value.data().end())}};
  }
  return doc;
}

ParamStore params_from_json(const nlohmann::json& doc, nlohmann::json* model_config) {
  if (doc.value("schema_version", -1) != kModelSchemaVersion) {
    throw std::runtime_error("model file: unsupported schema_version");
  }
  ParamStore params;
  for (const auto& [path, item] : doc.at("params").items()) {
    params.add(path, Tensor(item.at("shape").get<Shape>(), item.at("data").get<std::vector<double>>()));
  }
  if (model_config != nullptr) {
    *model_config = doc.at("model_config");
  }
  return params;
}

void save_model(const std::filesystem::path& file, const ParamStore& params,
                const nlohmann::json& model_config) {
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write model file " + file.string());
  }
  out << params_to_json(params, model_config).dump(1) << '\n';
}

ParamStore load_model(const std::filesystem::path& file, nlohmann::json* model_config) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read model file " + file.string());
  }
  return params_from_json(nlohmann::json::parse(in), model_config);
}

}  // namespace ratepred::nn
