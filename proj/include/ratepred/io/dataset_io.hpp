#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratepred/channel/simulate.hpp"
#include "ratepred/channel/trace.hpp"
#include "ratepred/measure/bandit.hpp"

namespace ratepred::io {

inline constexpr int kDatasetSchemaVersion = 1;

enum class Split { Train, Val, Test };
std::string to_string(Split s);
Split split_from_name(const std::string& name);

/// Seeded permutation of route indices, then 70/15/15 with val and test
/// sizes rounded down so the remainder goes to train.
std::vector<Split> assign_splits(std::size_t routes, std::uint64_t seed);

struct DatasetManifest {
  int schema_version = kDatasetSchemaVersion;
  std::uint64_t master_seed = 0;
  std::string rng_algorithm;
  std::string mobility;
  std::size_t routes = 0;
  std::size_t steps = 0;
  double period_ms = 50.0;
  channel::ChannelConfig channel;  // links, antennas, shadowing, geometry
  std::optional<measure::BanditParams> bandit;
  std::optional<std::uint64_t> mask_seed;
  std::vector<Split> split;
  std::vector<std::string> route_files;
};

nlohmann::json to_json(const channel::LinkConfig& link);
channel::LinkConfig link_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<channel::LinkConfig>& links);
std::vector<channel::LinkConfig> links_from_json(const nlohmann::json& j);
nlohmann::json to_json(const measure::BanditParams& p);
measure::BanditParams bandit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const channel::ChannelConfig& c);
channel::ChannelConfig channel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// Wide CSV: t, snr_db_1..M, rate_bps_1..M and, once masked, meas_1..M and
/// obs_snr_db_1..M (empty field when unmeasured).
std::string trace_to_csv(const channel::TraceSet& trace);
channel::TraceSet trace_from_csv(const std::filesystem::path& file);

std::string route_file_name(std::size_t index);

struct Dataset {
  std::filesystem::path dir;
  DatasetManifest manifest;
  std::vector<channel::TraceSet> routes;

  bool masked() const { return manifest.bandit.has_value(); }
  std::vector<channel::TraceSet> split_routes(Split s) const;
};

Dataset load_dataset(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);

}  // namespace ratepred::io
