#pragma once

#include <cstdint>
#include <vector>

#include "ratepred/channel/antenna.hpp"
#include "ratepred/channel/link.hpp"
#include "ratepred/channel/mobility.hpp"
#include "ratepred/channel/trace.hpp"

namespace ratepred::channel {

/// Site and start-position geometry. Both gNB cells sit at the site.
struct Geometry {
  double site_x = 0.0;
  double site_y = 0.0;
  double gnb_height_m = 10.0;
  double ue_height_m = 1.5;
  double start_radius_min_m = 50.0;
  double start_radius_max_m = 250.0;
};

struct ChannelConfig {
  std::vector<LinkConfig> links;
  std::vector<AntennaModel> antennas;
  /// Per-link shadowing standard deviation, same order as `links`.
  std::vector<double> shadow_sigma_db;
  double shadow_corr_distance_m = 13.0;
  Geometry geometry;
  std::size_t steps = 1200;
};

/// Four-link layout: RX1/RX2 15 GHz patches facing +x/-x, RX3/RX4 3.5 GHz
/// dipoles along z/y; shadowing sigma 4 dB below 7.125 GHz, 6 dB above.
ChannelConfig default_channel_config();

/// Shadowing sigma used by default for a carrier (FR1 4 dB, FR3 6 dB).
double default_shadow_sigma_db(double carrier_freq_ghz);

void validate(const ChannelConfig& config);

/// Deterministic in (config, level, seed). Step 0 is the sampled start state;
/// each later step applies mobility, rotation and shadowing updates.
TraceSet simulate_route(const ChannelConfig& config, const MobilityLevel& level, std::uint64_t seed);

/// Route seed for `route_index` under a master seed.
std::uint64_t route_seed(std::uint64_t master_seed, std::size_t route_index);

}  // namespace ratepred::channel
