#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratepred/channel/link.hpp"
#include "ratepred/measure/bandit.hpp"
#include "ratepred/model/predictor.hpp"
#include "ratepred/model/trainer.hpp"

namespace ratepred::io {

/// Everything a pipeline run depends on. JSON keys equal the field names;
/// nested groups are "bandit", "model" and "training".
struct RunConfig {
  std::uint64_t seed = 1;
  std::string mobility = "medium";
  std::size_t routes = 20;
  std::size_t steps = 1200;
  std::vector<channel::LinkConfig> links = channel::default_links();
  measure::BanditParams bandit;
  model::ModelConfig model;  // caps_bps is filled from the link table
  model::TrainConfig training;
  std::filesystem::path output_dir = "run";
};

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
RunConfig apply_config_json(RunConfig base, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& file, RunConfig base = {});
nlohmann::json to_json(const RunConfig& c);

/// Model config with the caps taken from the link table.
model::ModelConfig model_config_for(const RunConfig& c);

}  // namespace ratepred::io
