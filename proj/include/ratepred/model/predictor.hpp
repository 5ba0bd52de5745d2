#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ratepred/channel/trace.hpp"
#include "ratepred/model/features.hpp"
#include "ratepred/nn/tape.hpp"
#include "ratepred/rng.hpp"

namespace ratepred::model {

struct ModelConfig {
  std::size_t window = 20;
  std::size_t links = 4;
  std::size_t embed_dim = 64;
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t head_hidden = 64;
  std::size_t kernel_size = 3;
  double dropout = 0.2;
  std::vector<double> caps_bps;  // B_i * rho_max per link
  double rate_unit_bps = kDefaultRateUnitBps;

  /// Throws std::invalid_argument naming the first broken constraint.
  void validate() const;
  /// Caps divided by the rate unit, as a [links] tensor.
  nn::Tensor caps_in_units() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Fresh parameters. The feature affine starts at scale 1, shift 0.
nn::ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Checks that every parameter the model needs is present with the right shape.
void check_params(const nn::ParamStore& params, const ModelConfig& cfg);

/// windows [B, W, M, 3] -> predictions [B, M] in rate units. `rng` drives
/// dropout and may be null when train is false.
nn::Var forward(nn::Tape& tape, nn::ParamStore& params, const ModelConfig& cfg, nn::Var windows,
                bool train, Rng* rng);

/// Mean squared error in rate units over every element.
nn::Var mse_loss(nn::Var predictions, const nn::Tensor& targets);

/// Eval-mode forward without gradients; returns [B, M] in bits/s.
nn::Tensor predict(const nn::ParamStore& params, const ModelConfig& cfg, const nn::Tensor& windows);

/// Predictions for t in [W, steps), step-major, bits/s. Needs steps >= W + 1.
std::vector<double> predict_series(const channel::TraceSet& trace,
                                   std::span<const channel::LinkConfig> links,
                                   const nn::ParamStore& params, const ModelConfig& cfg,
                                   std::size_t batch = 256);

}  // namespace ratepred::model
