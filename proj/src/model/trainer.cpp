#include "ratepred/model/trainer.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "ratepred/rng.hpp"

namespace ratepred::model {

namespace {

struct WindowRef {
  std::size_t route;
  std::size_t t;
};

struct Prepared {
  std::vector<FeatureStream> streams;
  std::vector<WindowRef> windows;
};

Prepared prepare(std::span<const channel::TraceSet> routes, std::span<const channel::LinkConfig> links,
                 const ModelConfig& cfg, std::size_t stride, const char* split) {
  if (routes.empty()) {
    throw std::invalid_argument(std::string("train: empty ") + split + " split");
  }
  Prepared p;
  for (std::size_t r = 0; r < routes.size(); ++r) {
    if (routes[r].links != cfg.links) {
      throw std::invalid_argument("train: route link count does not match the model");
    }
    p.streams.push_back(featurize_route(routes[r], links, cfg.rate_unit_bps));
    for (std::size_t t = cfg.window; t < routes[r].steps; t += stride) {
      p.windows.push_back({r, t});
    }
  }
  if (p.windows.empty()) {
    throw std::invalid_argument(std::string("train: ") + split + " split has no route longer than W");
  }
  return p;
}

void fill_batch(const Prepared& p, std::span<const channel::TraceSet> routes, const ModelConfig& cfg,
                std::span<const WindowRef> refs, nn::Tensor& windows, nn::Tensor& targets) {
  const std::size_t n = refs.size(), M = cfg.links;
  const std::size_t per_window = cfg.window * M * kRawFeatures;
  windows = nn::Tensor(nn::Shape{n, cfg.window, M, kRawFeatures});
  targets = nn::Tensor(nn::Shape{n, M});
  for (std::size_t b = 0; b < n; ++b) {
    const WindowRef& w = refs[b];
    copy_window(p.streams[w.route], w.t, cfg.window, windows.ptr() + b * per_window);
    for (std::size_t i = 0; i < M; ++i) {
      targets[b * M + i] = routes[w.route].rate(w.t, i) / cfg.rate_unit_bps;
    }
  }
}

double eval_prepared(const nn::ParamStore& params, const ModelConfig& cfg, const Prepared& p,
                     std::span<const channel::TraceSet> routes) {
  constexpr std::size_t kEvalBatch = 512;
  double sum = 0.0;
  std::size_t count = 0;
  nn::Tensor windows, targets;
  for (std::size_t start = 0; start < p.windows.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, p.windows.size() - start);
    fill_batch(p, routes, cfg, std::span(p.windows).subspan(start, n), windows, targets);
    const nn::Tensor pred = predict(params, cfg, windows);
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const double e = pred[j] / cfg.rate_unit_bps - targets[j];
      sum += e * e;
    }
    count += pred.size();
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double evaluate_loss(const nn::ParamStore& params, const ModelConfig& cfg,
                     std::span<const channel::TraceSet> routes,
                     std::span<const channel::LinkConfig> links) {
  return eval_prepared(params, cfg, prepare(routes, links, cfg, 1, "evaluation"), routes);
}

TrainResult train(std::span<const channel::TraceSet> train_routes,
                  std::span<const channel::TraceSet> val_routes,
                  std::span<const channel::LinkConfig> links, const ModelConfig& model_cfg,
                  const TrainConfig& tc, const EpochCallback& on_epoch) {
  model_cfg.validate();
  if (tc.batch_size == 0 || tc.stride == 0) {
    throw std::invalid_argument("train: batch size and stride must be positive");
  }
  Prepared train_set = prepare(train_routes, links, model_cfg, tc.stride, "train");
  const Prepared val_set = prepare(val_routes, links, model_cfg, 1, "validation");

  Rng shuffle_rng(stable_hash(tc.seed, 1));
  Rng dropout_rng(stable_hash(tc.seed, 2));

  TrainResult result;
  nn::ParamStore params = init_params(model_cfg, stable_hash(tc.seed, 0));
  nn::AdamState adam(params, tc.adam);
  result.best_val_loss = std::numeric_limits<double>::infinity();

  nn::Tensor windows, targets;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span(train_set.windows));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_set.windows.size(); start += tc.batch_size) {
      const std::size_t n = std::min(tc.batch_size, train_set.windows.size() - start);
      fill_batch(train_set, train_routes, model_cfg, std::span(train_set.windows).subspan(start, n),
                 windows, targets);
      nn::Tape tape;
      nn::Var pred = forward(tape, params, model_cfg, tape.constant(windows), true, &dropout_rng);
      nn::Var loss = mse_loss(pred, targets);
      params.zero_grad();
      tape.backward(loss);
      nn::adam_step(params, adam);
      loss_sum += loss.value().item() * static_cast<double>(n);
    }
    EpochLog row{epoch, loss_sum / static_cast<double>(train_set.windows.size()),
                 eval_prepared(params, model_cfg, val_set, val_routes)};
    result.log.push_back(row);
    if (row.val_loss < result.best_val_loss) {
      result.best_val_loss = row.val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
    if (on_epoch) on_epoch(row);
  }
  if (result.params.size() == 0) {  // no epochs, or validation never finite
    result.params = params;
    result.best_val_loss = eval_prepared(params, model_cfg, val_set, val_routes);
  }
  return result;
}

}  // namespace ratepred::model
