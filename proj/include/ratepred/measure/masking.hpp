#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ratepred/channel/link.hpp"
#include "ratepred/channel/trace.hpp"
#include "ratepred/measure/bandit.hpp"

namespace ratepred::measure {

/// Runs select/observe/update over every step of one route with a fresh
/// bandit, filling the trace's mask and observed SNR. True rates stay as labels.
void mask_route(channel::TraceSet& trace, std::span<const channel::LinkConfig> links,
                const BanditParams& params, std::uint64_t seed);

/// Masks every route; route r uses stream stable_hash(seed, r).
void build_masked_dataset(std::vector<channel::TraceSet>& routes,
                          std::span<const channel::LinkConfig> links, const BanditParams& params,
                          std::uint64_t seed);

}  // namespace ratepred::measure
