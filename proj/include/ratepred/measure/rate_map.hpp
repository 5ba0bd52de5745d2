#pragma once

#include "ratepred/channel/link.hpp"

namespace ratepred::measure {

double db_to_linear(double db);
double linear_to_db(double linear);

/// R = B * min(rho_max, beta * log2(1 + snr)). Throws on negative SNR.
double rate_from_snr(double snr_linear, const channel::LinkConfig& link);
double rate_from_snr_db(double snr_db, const channel::LinkConfig& link);

/// Smallest SNR (dB) at which the rate reaches the cap; +inf if it never does.
double saturation_snr_db(const channel::LinkConfig& link);

}  // namespace ratepred::measure
