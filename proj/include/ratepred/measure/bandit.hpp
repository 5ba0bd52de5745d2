#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ratepred/channel/link.hpp"
#include "ratepred/rng.hpp"

namespace ratepred::measure {

/// Links measured in one period. Indices are 0-based positions in the link
/// table (link_id - 1), sorted ascending.
struct ActiveSet {
  std::size_t t = 0;
  std::vector<std::size_t> links;

  bool contains(std::size_t link) const;
};

/// Per-link measured SNR in dB; nullopt is "no measurement".
using Observation = std::vector<std::optional<double>>;

/// Reports true SNR plus Gaussian noise (std in dB) for links in `active`.
/// No random numbers are drawn when noise_std_db is 0.
Observation observe(std::span<const double> true_snr_db, const ActiveSet& active,
                    double noise_std_db, Rng& rng);

struct BanditParams {
  double epsilon = 0.2;
  double eta = 0.1;
  std::size_t k = 1;
  double noise_std_db = 0.0;
};

/// Exponential-weights state over individual links.
struct BanditState {
  std::vector<double> weights;
  BanditParams params;
  /// Marginal inclusion probabilities of the most recent draw.
  std::vector<double> draw_probs;
};

BanditState make_bandit(std::size_t num_links, const BanditParams& params);

/// Probability that each link ends up in the drawn subset: epsilon * k / M
/// from uniform exploration plus (1 - epsilon) times the inclusion
/// probability of sequential weight-proportional sampling without
/// replacement (computed exactly over subsets).
std::vector<double> selection_marginals(std::span<const double> weights, double epsilon, std::size_t k);

/// Draws k distinct links: uniformly with probability epsilon, otherwise
/// proportional to weight, renormalizing over the links still available.
ActiveSet bandit_select(BanditState& state, Rng& rng, std::size_t t = 0);

/// EXP3-style update with importance-weighted rewards r / p where r is the
/// observed rate over the link cap. Weights are rescaled to mean 1 and kept
/// at or above the smallest normal double.
void bandit_update(BanditState& state, const ActiveSet& active, const Observation& obs,
                   std::span<const channel::LinkConfig> links);

}  // namespace ratepred::measure
