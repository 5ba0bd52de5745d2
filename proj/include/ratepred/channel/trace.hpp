#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ratepred::channel {

/// Ground truth for one route, stored step-major ([step][link]). Masking
/// fills `mask` and `obs_snr_db`; both stay empty on a raw trace.
struct TraceSet {
  std::uint64_t seed = 0;
  std::string mobility;
  std::size_t steps = 0;
  std::size_t links = 0;
  double period_s = 0.05;

  std::vector<double> snr_db;
  std::vector<double> rate_bps;
  std::vector<std::uint8_t> mask;
  std::vector<double> obs_snr_db;  // NaN where unmeasured

  bool masked() const { return !mask.empty(); }
  std::size_t at(std::size_t t, std::size_t link) const { return t * links + link; }
  double snr(std::size_t t, std::size_t link) const { return snr_db[at(t, link)]; }
  double rate(std::size_t t, std::size_t link) const { return rate_bps[at(t, link)]; }
  bool measured(std::size_t t, std::size_t link) const { return mask[at(t, link)] != 0; }

  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

}  // namespace ratepred::channel
