#include "ratepred/measure/bandit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ratepred/measure/rate_map.hpp"

namespace ratepred::measure {

bool ActiveSet::contains(std::size_t link) const {
  return std::binary_search(links.begin(), links.end(), link);
}

Observation observe(std::span<const double> true_snr_db, const ActiveSet& active,
                    double noise_std_db, Rng& rng) {
  Observation obs(true_snr_db.size());
  for (std::size_t i : active.links) {
    if (i >= obs.size()) {
      throw std::invalid_argument("observe: active link index out of range");
    }
    double v = true_snr_db[i];
    if (noise_std_db > 0.0) {
      v += noise_std_db * rng.normal();
    }
    obs[i] = v;
  }
  return obs;
}

BanditState make_bandit(std::size_t num_links, const BanditParams& params) {
  if (num_links == 0) {
    throw std::invalid_argument("bandit: need at least one link");
  }
  if (params.k > num_links) {
    throw std::invalid_argument("bandit: subset size k=" + std::to_string(params.k) +
                                " exceeds link count " + std::to_string(num_links));
  }
  if (!(params.epsilon >= 0.0 && params.epsilon <= 1.0) || !(params.eta >= 0.0)) {
    throw std::invalid_argument("bandit: epsilon must lie in [0, 1] and eta be non-negative");
  }
  BanditState s;
  s.weights.assign(num_links, 1.0);
  s.params = params;
  s.draw_probs = selection_marginals(s.weights, params.epsilon, params.k);
  return s;
}

std::vector<double> selection_marginals(std::span<const double> weights, double epsilon, std::size_t k) {
  const std::size_t m = weights.size();
  if (k > m) {
    throw std::invalid_argument("selection_marginals: k exceeds link count");
  }
  std::vector<double> q(m, 0.0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (k == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      q[i] = weights[i] / total;
    }
  } else if (k == m) {
    std::fill(q.begin(), q.end(), 1.0);
  } else if (k > 0) {
    if (m > 24) {
      throw std::invalid_argument("selection_marginals: exact marginals need M <= 24 when 1 < k < M");
    }
    // reach[S]: probability that the first |S| draws produce exactly set S.
    std::vector<double> reach(std::size_t{1} << m, 0.0);
    reach[0] = 1.0;
    for (std::size_t s = 0; s < reach.size(); ++s) {
      const auto size = static_cast<std::size_t>(std::popcount(s));
      if (reach[s] == 0.0) {
        continue;
      }
      if (size == k) {
        for (std::size_t i = 0; i < m; ++i) {
          if (s & (std::size_t{1} << i)) {
            q[i] += reach[s];
          }
        }
        continue;
      }
      double left = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (!(s & (std::size_t{1} << i))) {
          left += weights[i];
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (!(s & (std::size_t{1} << i))) {
          reach[s | (std::size_t{1} << i)] += reach[s] * weights[i] / left;
        }
      }
    }
  }
  std::vector<double> p(m);
  const double uniform = static_cast<double>(k) / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    p[i] = epsilon * uniform + (1.0 - epsilon) * q[i];
  }
  return p;
}

ActiveSet bandit_select(BanditState& state, Rng& rng, std::size_t t) {
  const std::size_t m = state.weights.size();
  const std::size_t k = state.params.k;
  if (k > m) {
    throw std::invalid_argument("bandit_select: k exceeds link count");
  }
  state.draw_probs = selection_marginals(state.weights, state.params.epsilon, k);

  ActiveSet out;
  out.t = t;
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  if (rng.uniform() < state.params.epsilon) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t pick = j + rng.below(m - j);
      std::swap(pool[j], pool[pick]);
      out.links.push_back(pool[j]);
    }
  } else {
    for (std::size_t j = 0; j < k; ++j) {
      double total = 0.0;
      for (std::size_t i = j; i < m; ++i) {
        total += state.weights[pool[i]];
      }
      double u = rng.uniform() * total;
      std::size_t pick = m - 1;
      for (std::size_t i = j; i < m; ++i) {
        u -= state.weights[pool[i]];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
      std::swap(pool[j], pool[pick]);
      out.links.push_back(pool[j]);
    }
  }
  std::sort(out.links.begin(), out.links.end());
  return out;
}

void bandit_update(BanditState& state, const ActiveSet& active, const Observation& obs,
                   std::span<const channel::LinkConfig> links) {
  const std::size_t m = state.weights.size();
  if (obs.size() != m || links.size() != m) {
    throw std::invalid_argument("bandit_update: observation/link count mismatch");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (obs[i].has_value() != active.contains(i)) {
      throw std::invalid_argument("bandit_update: observation does not match the active set");
    }
  }
  constexpr double kSlack = 1e-12;
  for (std::size_t i : active.links) {
    const double reward = rate_from_snr_db(*obs[i], links[i]) / links[i].rate_cap_bps();
    if (!(reward >= -kSlack && reward <= 1.0 + kSlack)) {
      throw std::invalid_argument("bandit_update: normalized reward outside [0, 1] on link " +
                                  std::to_string(i + 1));
    }
    const double estimate = std::clamp(reward, 0.0, 1.0) / state.draw_probs[i];
    state.weights[i] *= std::exp(state.params.eta * estimate);
  }
  const double mean = std::accumulate(state.weights.begin(), state.weights.end(), 0.0) / static_cast<double>(m);
  for (double& w : state.weights) {
    w = std::max(w / mean, std::numeric_limits<double>::min());
  }
}

}  // namespace ratepred::measure
