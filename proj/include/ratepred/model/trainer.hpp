#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ratepred/channel/link.hpp"
#include "ratepred/channel/trace.hpp"
#include "ratepred/model/predictor.hpp"
#include "ratepred/nn/adam.hpp"

namespace ratepred::model {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  std::size_t stride = 1;  // spacing between training windows within a route
  nn::AdamConfig adam;
  std::uint64_t seed = 1;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  nn::ParamStore params;  // parameters from the epoch with the lowest val loss
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Routes must be masked. Validation always uses every window (stride 1).
TrainResult train(std::span<const channel::TraceSet> train_routes,
                  std::span<const channel::TraceSet> val_routes,
                  std::span<const channel::LinkConfig> links, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const EpochCallback& on_epoch = {});

/// Mean squared error in rate units of eval-mode predictions over all windows.
double evaluate_loss(const nn::ParamStore& params, const ModelConfig& cfg,
                     std::span<const channel::TraceSet> routes,
                     std::span<const channel::LinkConfig> links);

}  // namespace ratepred::model
