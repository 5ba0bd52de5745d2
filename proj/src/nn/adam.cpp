#include "ratepred/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ratepred::nn {

AdamState::AdamState(const ParamStore& params, AdamConfig config) : config_(config) {
  for (const auto& [path, e] : params) {
    moments_.emplace(path, Moments{Tensor(e.value.shape()), Tensor(e.value.shape())});
  }
}

void adam_step(ParamStore& params, AdamState& state) {
  for (const auto& [path, e] : params) {
    if (!e.grad_ready) {
      throw std::invalid_argument("adam_step: no gradient for parameter '" + path + "'");
    }
    auto it = state.moments_.find(path);
    if (it == state.moments_.end() || it->second.m.shape() != e.value.shape() ||
        e.grad.shape() != e.value.shape()) {
      throw std::invalid_argument("adam_step: optimizer state does not cover parameter '" + path + "'");
    }
  }
  const AdamConfig& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [path, e] : params) {
    auto& mo = state.moments_.at(path);
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad[i];
      mo.m[i] = c.beta1 * mo.m[i] + (1.0 - c.beta1) * g;
      mo.v[i] = c.beta2 * mo.v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = mo.m[i] / bc1;
      const double v_hat = mo.v[i] / bc2;
      e.value[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace ratepred::nn
