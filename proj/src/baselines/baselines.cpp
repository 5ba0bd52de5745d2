#include "ratepred/baselines/baselines.hpp"

#include <stdexcept>
#include <string>

namespace ratepred::baselines {

std::string_view to_string(Baseline b) { return b == Baseline::B1 ? "B1" : "B2"; }

Baseline baseline_from_name(std::string_view name) {
  if (name == "B1" || name == "b1") return Baseline::B1;
  if (name == "B2" || name == "b2") return Baseline::B2;
  throw std::invalid_argument("unknown baseline '" + std::string(name) + "'");
}

std::vector<double> b1_step(std::span<const double> previous_true) {
  return {previous_true.begin(), previous_true.end()};
}

const std::vector<double>& b2_step(BaselineState& state, std::span<const double> previous_true,
                                   std::span<const std::uint8_t> previous_mask) {
  const std::size_t m = state.predicted.size();
  if (previous_mask.size() != m || previous_true.size() != m) {
    throw std::invalid_argument("b2_step: expected " + std::to_string(m) + " links, got mask of " +
                                std::to_string(previous_mask.size()) + " and rates of " +
                                std::to_string(previous_true.size()));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (previous_mask[i]) {
      state.predicted[i] = previous_true[i];
    }
  }
  return state.predicted;
}

std::vector<double> run_baseline(const channel::TraceSet& trace, Baseline which, std::size_t window) {
  const std::size_t m = trace.links;
  if (trace.steps == 0 || m == 0) {
    throw std::invalid_argument("run_baseline: empty trace");
  }
  if (which == Baseline::B2 && !trace.masked()) {
    throw std::invalid_argument("run_baseline: B2 needs a masked trace");
  }
  std::vector<double> out;
  if (window < trace.steps) {
    out.reserve((trace.steps - window) * m);
  }
  const auto rates = [&](std::size_t t) { return std::span(trace.rate_bps).subspan(t * m, m); };
  BaselineState state{{rates(0).begin(), rates(0).end()}};
  for (std::size_t t = 0; t < trace.steps; ++t) {
    if (t > 0) {
      if (which == Baseline::B1) {
        state.predicted = b1_step(rates(t - 1));
      } else {
        b2_step(state, rates(t - 1), std::span(trace.mask).subspan((t - 1) * m, m));
      }
    }
    if (t >= window) {
      out.insert(out.end(), state.predicted.begin(), state.predicted.end());
    }
  }
  return out;
}

}  // namespace ratepred::baselines
