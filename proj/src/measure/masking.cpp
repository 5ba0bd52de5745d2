#include "ratepred/measure/masking.hpp"

#include <limits>
#include <stdexcept>

namespace ratepred::measure {

void mask_route(channel::TraceSet& trace, std::span<const channel::LinkConfig> links,
                const BanditParams& params, std::uint64_t seed) {
  if (links.size() != trace.links) {
    throw std::invalid_argument("mask_route: link table does not match the trace");
  }
  Rng rng(seed);
  BanditState bandit = make_bandit(trace.links, params);
  trace.mask.assign(trace.steps * trace.links, 0);
  trace.obs_snr_db.assign(trace.steps * trace.links, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 0; t < trace.steps; ++t) {
    const ActiveSet active = bandit_select(bandit, rng, t);
    const std::span<const double> truth(trace.snr_db.data() + trace.at(t, 0), trace.links);
    const Observation obs = observe(truth, active, params.noise_std_db, rng);
    bandit_update(bandit, active, obs, links);
    for (std::size_t i : active.links) {
      trace.mask[trace.at(t, i)] = 1;
      trace.obs_snr_db[trace.at(t, i)] = *obs[i];
    }
  }
}

void build_masked_dataset(std::vector<channel::TraceSet>& routes,
                          std::span<const channel::LinkConfig> links, const BanditParams& params,
                          std::uint64_t seed) {
  for (std::size_t r = 0; r < routes.size(); ++r) {
    mask_route(routes[r], links, params, stable_hash(seed, r));
  }
}

}  // namespace ratepred::measure
