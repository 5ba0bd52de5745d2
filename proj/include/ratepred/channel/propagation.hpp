#pragma once

#include "ratepred/channel/link.hpp"
#include "ratepred/rng.hpp"

namespace ratepred::channel {

/// Urban-micro line-of-sight form; distances below 1 m are clamped.
double pathloss_db(double distance_3d_m, double carrier_freq_ghz);

/// Gauss-Markov shadowing: rho * s + sigma * sqrt(1 - rho^2) * n with
/// rho = exp(-distance_delta / corr_distance).
double shadowing_step(double previous_db, double distance_delta_m, double sigma_db,
                      double corr_distance_m, double standard_normal);
double shadowing_step(double previous_db, double distance_delta_m, double sigma_db,
                      double corr_distance_m, Rng& rng);

/// Thermal noise over the link bandwidth plus noise figure, in dBm.
double noise_power_dbm(const LinkConfig& link);

double snr_db(const LinkConfig& link, double gain_db, double pathloss, double shadow_db);

}  // namespace ratepred::channel
