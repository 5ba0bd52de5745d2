#include "ratepred/model/features.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ratepred/measure/rate_map.hpp"

namespace ratepred::model {

std::vector<FeatureVector> featurize(const measure::Observation& obs,
                                     std::span<const channel::LinkConfig> links, double rate_unit_bps) {
  if (obs.size() != links.size()) {
    throw std::invalid_argument("featurize: observation and link table sizes differ");
  }
  std::vector<FeatureVector> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i]) {
      out[i] = {1.0, *obs[i], measure::rate_from_snr_db(*obs[i], links[i]) / rate_unit_bps};
    }
  }
  return out;
}

FeatureStream featurize_route(const channel::TraceSet& trace, std::span<const channel::LinkConfig> links,
                              double rate_unit_bps) {
  if (!trace.masked()) {
    throw std::invalid_argument("featurize_route: trace has no measurement mask");
  }
  if (links.size() != trace.links) {
    throw std::invalid_argument("featurize_route: link table does not match the trace");
  }
  FeatureStream s;
  s.steps = trace.steps;
  s.links = trace.links;
  s.values.assign(trace.steps * trace.links * kRawFeatures, 0.0);
  for (std::size_t t = 0; t < trace.steps; ++t) {
    for (std::size_t i = 0; i < trace.links; ++i) {
      if (!trace.measured(t, i)) {
        continue;
      }
      const double snr = trace.obs_snr_db[trace.at(t, i)];
      double* f = s.values.data() + (t * trace.links + i) * kRawFeatures;
      f[0] = 1.0;
      f[1] = snr;
      f[2] = measure::rate_from_snr_db(snr, links[i]) / rate_unit_bps;
    }
  }
  return s;
}

void copy_window(const FeatureStream& stream, std::size_t t, std::size_t window, double* out) {
  if (window == 0 || t < window) {
    throw std::invalid_argument("build_window: need t >= W (t=" + std::to_string(t) +
                                ", W=" + std::to_string(window) + ")");
  }
  if (t > stream.steps) {
    throw std::invalid_argument("build_window: t beyond the end of the stream");
  }
  const std::size_t n = window * stream.links * kRawFeatures;
  std::copy_n(stream.row(t - window), n, out);
}

nn::Tensor build_window(const FeatureStream& stream, std::size_t t, std::size_t window) {
  nn::Tensor w(nn::Shape{std::max<std::size_t>(window, 1), stream.links, kRawFeatures});
  copy_window(stream, t, window, w.ptr());
  return w;
}

}  // namespace ratepred::model
