#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ratepred/channel/trace.hpp"

namespace ratepred::baselines {

/// B1 sees every link at t-1; B2 carries the last measured rate forward.
enum class Baseline { B1, B2 };

std::string_view to_string(Baseline b);
Baseline baseline_from_name(std::string_view name);

/// Last prediction per link, in bits/s. Starts at the true rates of step 0.
struct BaselineState {
  std::vector<double> predicted;
};

/// R_hat_t = R_{t-1}.
std::vector<double> b1_step(std::span<const double> previous_true);

/// R_hat_t = m ⊙ R_{t-1} + (1 - m) ⊙ R_hat_{t-1}. Updates and returns the state.
const std::vector<double>& b2_step(BaselineState& state, std::span<const double> previous_true,
                                   std::span<const std::uint8_t> previous_mask);

/// Runs the recursion from t = 0 and keeps t in [window, steps), step-major.
/// B2 needs a masked trace.
std::vector<double> run_baseline(const channel::TraceSet& trace, Baseline which, std::size_t window);

}  // namespace ratepred::baselines
