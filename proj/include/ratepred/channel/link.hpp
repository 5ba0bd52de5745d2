#pragma once

#include <cstddef>
#include <vector>

namespace ratepred::channel {

/// One (gNB cell, RX array) pair.
struct LinkConfig {
  int link_id = 1;
  int gnb_id = 1;
  int rx_id = 1;
  double carrier_freq_ghz = 3.5;
  double bandwidth_hz = 100e6;
  double beta = 0.6;      // coding efficiency
  double rho_max = 4.8;   // bits/s/Hz
  double tx_power_dbm = 51.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 7.0;

  /// Highest achievable rate, B * rho_max.
  double rate_cap_bps() const { return bandwidth_hz * rho_max; }

  friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const LinkConfig& link);

/// BS1 (3.5 GHz, 100 MHz) to RX3/RX4 and BS2 (15 GHz, 200 MHz) to RX1/RX2.
std::vector<LinkConfig> default_links();

}  // namespace ratepred::channel
