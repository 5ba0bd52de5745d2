#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ratepred/channel/link.hpp"
#include "ratepred/channel/trace.hpp"
#include "ratepred/measure/bandit.hpp"
#include "ratepred/nn/tensor.hpp"

namespace ratepred::model {

inline constexpr std::size_t kRawFeatures = 3;
inline constexpr double kDefaultRateUnitBps = 1e8;

/// (measured flag, SNR dB, mapped rate in rate units); all zero when unmeasured.
struct FeatureVector {
  double measured = 0.0;
  double snr_db = 0.0;
  double rate = 0.0;
};

std::vector<FeatureVector> featurize(const measure::Observation& obs,
                                     std::span<const channel::LinkConfig> links,
                                     double rate_unit_bps = kDefaultRateUnitBps);

/// Featurized observations of a whole masked route, [steps][links][3].
struct FeatureStream {
  std::size_t steps = 0;
  std::size_t links = 0;
  std::vector<double> values;

  const double* row(std::size_t t) const { return values.data() + t * links * kRawFeatures; }
};

FeatureStream featurize_route(const channel::TraceSet& trace, std::span<const channel::LinkConfig> links,
                              double rate_unit_bps = kDefaultRateUnitBps);

/// Stacks steps t-W .. t-1 into a [W, M, 3] tensor. Throws when t < W or t > steps.
nn::Tensor build_window(const FeatureStream& stream, std::size_t t, std::size_t window);

/// Writes the same window into a caller-owned buffer of W*M*3 doubles.
void copy_window(const FeatureStream& stream, std::size_t t, std::size_t window, double* out);

}  // namespace ratepred::model
