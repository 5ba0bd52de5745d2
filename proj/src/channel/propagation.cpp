#include "ratepred/channel/propagation.hpp"

#include <algorithm>
#include <cmath>

namespace ratepred::channel {

double pathloss_db(double distance_3d_m, double carrier_freq_ghz) {
  const double d = std::max(distance_3d_m, 1.0);
  return 32.4 + 21.0 * std::log10(d) + 20.0 * std::log10(carrier_freq_ghz);
}

double shadowing_step(double previous_db, double distance_delta_m, double sigma_db,
                      double corr_distance_m, double standard_normal) {
  const double rho = std::exp(-distance_delta_m / corr_distance_m);
  return rho * previous_db + sigma_db * std::sqrt(1.0 - rho * rho) * standard_normal;
}

double shadowing_step(double previous_db, double distance_delta_m, double sigma_db,
                      double corr_distance_m, Rng& rng) {
  return shadowing_step(previous_db, distance_delta_m, sigma_db, corr_distance_m, rng.normal());
}

double noise_power_dbm(const LinkConfig& link) {
  return link.noise_psd_dbm_hz + 10.0 * std::log10(link.bandwidth_hz) + link.noise_figure_db;
}

double snr_db(const LinkConfig& link, double gain_db, double pathloss, double shadow_db) {
  return link.tx_power_dbm + gain_db - pathloss - shadow_db - noise_power_dbm(link);
}

}  // namespace ratepred::channel
