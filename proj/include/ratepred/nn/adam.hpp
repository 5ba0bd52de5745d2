#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ratepred/nn/tensor.hpp"

namespace ratepred::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments per parameter path plus the bias-correction step count.
class AdamState {
 public:
  AdamState(const ParamStore& params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  const Tensor& first_moment(const std::string& path) const { return moments_.at(path).m; }
  const Tensor& second_moment(const std::string& path) const { return moments_.at(path).v; }

 private:
  friend void adam_step(ParamStore& params, AdamState& state);

  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

/// One bias-corrected Adam update. Gradients are read, not cleared. Throws if
/// any parameter lacks a gradient or has no moment slot in `state`.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace ratepred::nn
