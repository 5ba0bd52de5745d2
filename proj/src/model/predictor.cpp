#include "ratepred/model/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ratepred/nn/ops.hpp"

namespace ratepred::model {

using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

[[noreturn]] void bad_config(const std::string& msg) {
  throw std::invalid_argument("model config: " + msg);
}

// Every learnable tensor with its shape. Kept in one place so init, checks and
// forward cannot disagree.
std::vector<std::pair<std::string, Shape>> param_shapes(const ModelConfig& c) {
  const std::size_t raw2 = 2 * kRawFeatures;
  const std::size_t d = c.embed_dim;
  return {
      {"affine.scale", {kRawFeatures}},
      {"affine.shift", {kRawFeatures}},
      {"encoder.conv1.kernel", {c.kernel_size, raw2, d}},
      {"encoder.conv1.bias", {d}},
      {"encoder.conv2.kernel", {c.kernel_size, d, d}},
      {"encoder.conv2.bias", {d}},
      {"antenna_embedding", {c.links, d}},
      {"block.ln1.gain", {d}},
      {"block.ln1.bias", {d}},
      {"block.attn.wq", {d, d}},
      {"block.attn.bq", {d}},
      {"block.attn.wk", {d, d}},
      {"block.attn.bk", {d}},
      {"block.attn.wv", {d, d}},
      {"block.attn.bv", {d}},
      {"block.attn.wo", {d, d}},
      {"block.attn.bo", {d}},
      {"block.ln2.gain", {d}},
      {"block.ln2.bias", {d}},
      {"block.ffn.w1", {d, c.ffn_dim}},
      {"block.ffn.b1", {c.ffn_dim}},
      {"block.ffn.w2", {c.ffn_dim, d}},
      {"block.ffn.b2", {d}},
      {"head.w1", {d + kRawFeatures, c.head_hidden}},
      {"head.b1", {c.head_hidden}},
      {"head.w2", {c.head_hidden, 1}},
      {"head.b2", {1}},
  };
}

Tensor uniform_tensor(const Shape& shape, double bound, Rng& rng) {
  Tensor t(shape);
  for (double& v : t.data()) {
    v = rng.uniform(-bound, bound);
  }
  return t;
}

}  // namespace

void ModelConfig::validate() const {
  if (window < 1) bad_config("window must be >= 1");
  if (links < 1) bad_config("links must be >= 1");
  if (embed_dim < 1 || heads < 1) bad_config("embed_dim and heads must be >= 1");
  if (embed_dim % heads != 0) {
    bad_config("embed_dim " + std::to_string(embed_dim) + " not divisible by heads " +
               std::to_string(heads));
  }
  if (ffn_dim < 1 || head_hidden < 1) bad_config("ffn_dim and head_hidden must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) bad_config("kernel_size must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad_config("dropout must lie in [0, 1)");
  if (caps_bps.size() != links) bad_config("need one cap per link");
  for (double c : caps_bps) {
    if (!(c > 0.0) || !std::isfinite(c)) bad_config("caps must be positive and finite");
  }
  if (!(rate_unit_bps > 0.0) || !std::isfinite(rate_unit_bps)) bad_config("rate unit must be positive");
}

Tensor ModelConfig::caps_in_units() const {
  Tensor caps(Shape{links});
  for (std::size_t i = 0; i < links; ++i) {
    caps[i] = caps_bps.at(i) / rate_unit_bps;
  }
  return caps;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"window", c.window},       {"links", c.links},
          {"embed_dim", c.embed_dim}, {"heads", c.heads},
          {"ffn_dim", c.ffn_dim},     {"head_hidden", c.head_hidden},
          {"kernel_size", c.kernel_size}, {"dropout", c.dropout},
          {"caps_bps", c.caps_bps},   {"rate_unit_bps", c.rate_unit_bps}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.window = j.at("window").get<std::size_t>();
    c.links = j.at("links").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.head_hidden = j.at("head_hidden").get<std::size_t>();
    c.kernel_size = j.at("kernel_size").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.caps_bps = j.at("caps_bps").get<std::vector<double>>();
    c.rate_unit_bps = j.at("rate_unit_bps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    bad_config(e.what());
  }
  c.validate();
  return c;
}

nn::ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  nn::ParamStore store;
  for (const auto& [path, shape] : param_shapes(cfg)) {
    Tensor init(shape);
    if (path == "affine.scale" || path.ends_with(".gain")) {
      init.fill(1.0);
    } else if (path == "antenna_embedding") {
      for (double& v : init.data()) v = 0.02 * rng.normal();
    } else if (shape.size() == 3) {
      const double fan_in = static_cast<double>(shape[0] * shape[1]);
      init = uniform_tensor(shape, std::sqrt(6.0 / fan_in), rng);
    } else if (shape.size() == 2) {
      const double fan = static_cast<double>(shape[0] + shape[1]);
      init = uniform_tensor(shape, std::sqrt(6.0 / fan), rng);
    }
    store.add(path, std::move(init));
  }
  // Start the head near the typical rate scale instead of far above the caps,
  // where min(., cap) would block the gradient.
  for (double& v : store.value("head.w2").data()) v *= 0.1;
  store.value("head.b2")[0] = std::log(std::expm1(1.0));
  return store;
}

void check_params(const nn::ParamStore& params, const ModelConfig& cfg) {
  for (const auto& [path, shape] : param_shapes(cfg)) {
    if (!params.contains(path)) {
      throw std::invalid_argument("model parameters: missing " + path);
    }
    if (params.value(path).shape() != shape) {
      throw nn::ShapeError("model parameter " + path, params.value(path).shape(), shape);
    }
  }
  if (params.size() != param_shapes(cfg).size()) {
    throw std::invalid_argument("model parameters: unexpected extra entries");
  }
}

namespace {

Var linear(nn::Tape& tape, nn::ParamStore& p, Var x, const std::string& w, const std::string& b) {
  return nn::add(nn::matmul(x, tape.param(p, w)), tape.param(p, b));
}

}  // namespace

Var forward(nn::Tape& tape, nn::ParamStore& p, const ModelConfig& cfg, Var windows, bool train,
            Rng* rng) {
  const Shape& s = windows.shape();
  const Shape expected{s.empty() ? 0 : s[0], cfg.window, cfg.links, kRawFeatures};
  if (s.size() != 4 || s != expected) {
    throw nn::ShapeError("predictor input", s, expected);
  }
  const bool use_dropout = train && cfg.dropout > 0.0;
  if (use_dropout && rng == nullptr) {
    throw std::invalid_argument("forward: training with dropout needs an Rng");
  }
  Rng idle(0);
  Rng& drop_rng = rng ? *rng : idle;
  auto drop = [&](Var v) { return nn::dropout(v, cfg.dropout, drop_rng, use_dropout); };

  const std::size_t B = s[0], W = cfg.window, M = cfg.links, d = cfg.embed_dim;
  const std::size_t H = cfg.heads, dh = d / H;

  Var scaled = nn::affine_per_feature(windows, tape.param(p, "affine.scale"), tape.param(p, "affine.shift"));
  Var x = nn::concat({windows, scaled}, 3);                          // [B, W, M, 6]
  x = nn::reshape(nn::permute(x, {0, 2, 1, 3}), {B * M, W, 2 * kRawFeatures});

  x = nn::conv1d_time(x, tape.param(p, "encoder.conv1.kernel"), tape.param(p, "encoder.conv1.bias"));
  x = drop(nn::relu(x));
  x = nn::conv1d_time(x, tape.param(p, "encoder.conv2.kernel"), tape.param(p, "encoder.conv2.bias"));
  x = drop(nn::relu(x));
  Var h = nn::reshape(nn::mean_over_axis(x, 1), {B, M, d});
  h = nn::add(h, tape.param(p, "antenna_embedding"));

  // Self-attention across antennas.
  Var a = nn::layer_norm(h, tape.param(p, "block.ln1.gain"), tape.param(p, "block.ln1.bias"));
  auto split_heads = [&](Var v) { return nn::permute(nn::reshape(v, {B, M, H, dh}), {0, 2, 1, 3}); };
  Var q = split_heads(linear(tape, p, a, "block.attn.wq", "block.attn.bq"));
  Var k = split_heads(linear(tape, p, a, "block.attn.wk", "block.attn.bk"));
  Var v = split_heads(linear(tape, p, a, "block.attn.wv", "block.attn.bv"));
  Var scores = nn::scale(nn::matmul(q, nn::transpose_last2(k)), 1.0 / std::sqrt(static_cast<double>(dh)));
  Var attn = drop(nn::softmax_lastdim(scores));                     // [B, H, M, M]
  Var ctx = nn::reshape(nn::permute(nn::matmul(attn, v), {0, 2, 1, 3}), {B, M, d});
  h = nn::add(h, drop(linear(tape, p, ctx, "block.attn.wo", "block.attn.bo")));

  Var f = nn::layer_norm(h, tape.param(p, "block.ln2.gain"), tape.param(p, "block.ln2.bias"));
  f = drop(nn::relu(linear(tape, p, f, "block.ffn.w1", "block.ffn.b1")));
  h = nn::add(h, drop(linear(tape, p, f, "block.ffn.w2", "block.ffn.b2")));

  Var raw_mean = nn::mean_over_axis(windows, 1);                    // [B, M, 3]
  Var z = nn::concat({h, raw_mean}, 2);
  z = drop(nn::relu(linear(tape, p, z, "head.w1", "head.b1")));
  z = nn::reshape(linear(tape, p, z, "head.w2", "head.b2"), {B, M});
  return nn::elementwise_min_const(nn::softplus(z), cfg.caps_in_units());
}

Var mse_loss(Var predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) {
    throw nn::ShapeError("mse_loss", predictions.shape(), targets.shape());
  }
  Var diff = nn::sub(predictions, predictions.tape->constant(targets));
  return nn::mean_all(nn::multiply(diff, diff));
}

Tensor predict(const nn::ParamStore& params, const ModelConfig& cfg, const Tensor& windows) {
  nn::Tape tape;
  // The tape only writes to parameters during backward(), which never runs here.
  auto& store = const_cast<nn::ParamStore&>(params);
  Var out = forward(tape, store, cfg, tape.constant(windows), false, nullptr);
  Tensor result = out.value();
  for (double& r : result.data()) r *= cfg.rate_unit_bps;
  return result;
}

std::vector<double> predict_series(const channel::TraceSet& trace,
                                   std::span<const channel::LinkConfig> links,
                                   const nn::ParamStore& params, const ModelConfig& cfg,
                                   std::size_t batch) {
  if (trace.links != cfg.links) {
    throw std::invalid_argument("predict_series: trace has " + std::to_string(trace.links) +
                                " links, model expects " + std::to_string(cfg.links));
  }
  if (trace.steps < cfg.window + 1) {
    throw std::invalid_argument("predict_series: route of " + std::to_string(trace.steps) +
                                " steps is shorter than W + 1 = " + std::to_string(cfg.window + 1));
  }
  if (batch == 0) {
    throw std::invalid_argument("predict_series: batch must be positive");
  }
  const FeatureStream stream = featurize_route(trace, links, cfg.rate_unit_bps);
  const std::size_t W = cfg.window, M = cfg.links;
  const std::size_t per_window = W * M * kRawFeatures;
  std::vector<double> out;
  out.reserve((trace.steps - W) * M);
  for (std::size_t t0 = W; t0 < trace.steps; t0 += batch) {
    const std::size_t n = std::min(batch, trace.steps - t0);
    Tensor windows(Shape{n, W, M, kRawFeatures});
    for (std::size_t b = 0; b < n; ++b) {
      copy_window(stream, t0 + b, W, windows.ptr() + b * per_window);
    }
    const Tensor pred = predict(params, cfg, windows);
    out.insert(out.end(), pred.data().begin(), pred.data().end());
  }
  return out;
}

}  // namespace ratepred::model
