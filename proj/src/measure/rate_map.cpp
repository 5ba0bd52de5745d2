#include "ratepred/measure/rate_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ratepred::measure {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double rate_from_snr(double snr_linear, const channel::LinkConfig& link) {
  if (!(snr_linear >= 0.0)) {
    throw std::invalid_argument("rate_from_snr: SNR must be non-negative");
  }
  return link.bandwidth_hz * std::min(link.rho_max, link.beta * std::log2(1.0 + snr_linear));
}

double rate_from_snr_db(double snr_db, const channel::LinkConfig& link) {
  return rate_from_snr(db_to_linear(snr_db), link);
}

double saturation_snr_db(const channel::LinkConfig& link) {
  // exp2 overflows to +inf for huge rho_max / beta, which is the intended answer.
  const double db = linear_to_db(std::exp2(link.rho_max / link.beta) - 1.0);
  if (!std::isfinite(db)) {
    return db;
  }
  // The closed form can land a few ulps away from where the rounded map
  // actually reaches the cap; bracket and bisect to the first dB value that does.
  const double cap = link.bandwidth_hz * link.rho_max;
  auto saturated = [&](double x) { return rate_from_snr_db(x, link) >= cap; };
  double step = std::max(1e-12, std::abs(db) * 1e-12);
  double hi = db;
  while (!saturated(hi)) hi += (step *= 2.0);
  step = std::max(1e-12, std::abs(db) * 1e-12);
  double lo = db;
  while (saturated(lo)) lo -= (step *= 2.0);
  for (;;) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    (saturated(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace ratepred::measure
