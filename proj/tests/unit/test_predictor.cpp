#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "ratepred/channel/simulate.hpp"
#include "ratepred/measure/masking.hpp"
#include "ratepred/measure/rate_map.hpp"
#include "ratepred/model/features.hpp"
#include "ratepred/model/predictor.hpp"
#include "ratepred/model/trainer.hpp"
#include "ratepred/nn/gradcheck.hpp"
#include "ratepred/nn/ops.hpp"
#include "ratepred/nn/serialize.hpp"

using namespace ratepred;
using namespace ratepred::model;
using nn::Shape;
using nn::Tensor;

namespace {

ModelConfig small_config(double cap_bps = 1e11) {
  ModelConfig c;
  c.window = 4;
  c.links = 4;
  c.embed_dim = 8;
  c.heads = 2;
  c.ffn_dim = 16;
  c.head_hidden = 8;
  c.dropout = 0.0;
  c.caps_bps.assign(4, cap_bps);
  return c;
}

ModelConfig default_model() {
  ModelConfig c;
  for (const auto& l : channel::default_links()) c.caps_bps.push_back(l.rate_cap_bps());
  return c;
}

// Windows shaped like featurized data: a flag, and snr/rate only where flagged.
Tensor random_windows(std::size_t batch, const ModelConfig& cfg, Rng& rng, double snr_hi = 40.0) {
  Tensor w(Shape{batch, cfg.window, cfg.links, kRawFeatures});
  for (std::size_t e = 0; e < w.size(); e += kRawFeatures) {
    if (rng.uniform() < 0.5) {
      w[e] = 1.0;
      w[e + 1] = rng.uniform(-5.0, snr_hi);
      w[e + 2] = rng.uniform(0.0, 9.6);
    }
  }
  return w;
}

std::vector<channel::TraceSet> masked_routes(std::size_t n, std::size_t steps, std::uint64_t seed) {
  auto cc = channel::default_channel_config();
  cc.steps = steps;
  std::vector<channel::TraceSet> routes;
  for (std::size_t r = 0; r < n; ++r) {
    routes.push_back(channel::simulate_route(cc, channel::mobility_medium(), channel::route_seed(seed, r)));
  }
  measure::build_masked_dataset(routes, cc.links, {}, seed + 1);
  return routes;
}

Tensor permute_antennas(const Tensor& w, const std::vector<std::size_t>& perm) {
  const std::size_t B = w.dim(0), W = w.dim(1), M = w.dim(2);
  Tensor out(w.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < W; ++t)
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t f = 0; f < kRawFeatures; ++f)
          out[((b * W + t) * M + i) * kRawFeatures + f] = w[((b * W + t) * M + perm[i]) * kRawFeatures + f];
  return out;
}

}  // namespace

TEST_CASE("featurize maps measurements and zeroes the rest") {
  const auto links = channel::default_links();
  measure::Observation none(4);
  for (const auto& f : featurize(none, links)) {
    CHECK(f.measured == 0.0);
    CHECK(f.snr_db == 0.0);
    CHECK(f.rate == 0.0);
  }
  measure::Observation obs{0.0, std::nullopt, 60.0, std::nullopt};
  const auto f = featurize(obs, links);
  CHECK(f[0].measured == 1.0);
  CHECK(f[0].snr_db == 0.0);
  CHECK(f[0].rate == doctest::Approx(0.6).epsilon(1e-15));  // 0.6 bit/s/Hz over 100 MHz
  CHECK(f[2].rate == links[2].rate_cap_bps() / 1e8);
  CHECK(f[1].measured == 0.0);
  CHECK_THROWS_AS(featurize(measure::Observation(3), links), std::invalid_argument);
}

TEST_CASE("windows stack strictly past steps") {
  auto routes = masked_routes(1, 40, 3);
  const auto links = channel::default_links();
  const FeatureStream s = featurize_route(routes[0], links);
  CHECK(s.values.size() == 40 * 4 * 3);

  const Tensor w1 = build_window(s, 10, 1);
  CHECK(w1.shape() == Shape{1, 4, 3});
  for (std::size_t k = 0; k < 12; ++k) CHECK(w1[k] == s.row(9)[k]);

  const Tensor a = build_window(s, 20, 5), b = build_window(s, 21, 5);
  CHECK(a.size() == 3 * 4 * 5);
  for (std::size_t k = 12; k < a.size(); ++k) CHECK(b[k - 12] == a[k]);

  CHECK_NOTHROW(build_window(s, 40, 5));
  CHECK_THROWS_AS(build_window(s, 4, 5), std::invalid_argument);
  CHECK_THROWS_AS(build_window(s, 41, 5), std::invalid_argument);

  channel::TraceSet raw = routes[0];
  raw.mask.clear();
  CHECK_THROWS_AS(featurize_route(raw, links), std::invalid_argument);
}

TEST_CASE("model config validation") {
  ModelConfig c = default_model();
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_model();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_model();
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_model();
  c.caps_bps.pop_back();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_model();
  CHECK(model_config_from_json(to_json(c)) == c);
  CHECK_THROWS_AS(model_config_from_json(nlohmann::json{{"window", 3}}), std::invalid_argument);
}

TEST_CASE("initial feature scaling is the identity") {
  const ModelConfig cfg = default_model();
  nn::ParamStore p = init_params(cfg, 5);
  CHECK_NOTHROW(check_params(p, cfg));
  Rng rng(1);
  const Tensor w = random_windows(3, cfg, rng);
  nn::Tape tape;
  nn::Var scaled = nn::affine_per_feature(tape.constant(w), tape.param(p, "affine.scale"),
                                          tape.param(p, "affine.shift"));
  CHECK(scaled.value() == w);

  nn::ParamStore partial;
  for (const auto& [path, e] : p) {
    if (path != "head.b2") partial.add(path, e.value);
  }
  CHECK_THROWS_AS(check_params(partial, cfg), std::invalid_argument);
}

TEST_CASE("full predictor gradients match finite differences") {
  const ModelConfig cfg = small_config();
  nn::ParamStore p = init_params(cfg, 17);
  Rng rng(2);
  // Zero-initialized biases put all-zero (unmeasured) windows exactly on the
  // ReLU kink; check at a generic point instead.
  for (auto& [path, e] : p) {
    for (double& v : e.value.data()) v += 0.05 * rng.normal();
  }
  const Tensor w = random_windows(3, cfg, rng, 20.0);
  Tensor target(Shape{3, 4});
  for (double& v : target.data()) v = rng.uniform(0.0, 5.0);
  auto closure = [&](nn::Tape& tape, nn::ParamStore& ps) {
    return mse_loss(forward(tape, ps, cfg, tape.constant(w), false, nullptr), target);
  };
  const auto report = nn::gradient_check(closure, p);
  CHECK(report.params.size() == p.size());
  CHECK(report.max_rel_error <= 1e-4);
  CHECK(report.passed);
}

TEST_CASE("predictions stay within [0, cap]") {
  ModelConfig cfg = default_model();
  cfg.embed_dim = 16;
  cfg.heads = 2;
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    nn::ParamStore p = init_params(cfg, seed);
    // Push the head output up so the cap actually binds for some inputs.
    p.value("head.b2")[0] = seed * 3.0;
    const Tensor pred = predict(p, cfg, random_windows(250, cfg, rng, 60.0));
    for (std::size_t j = 0; j < pred.size(); ++j) {
      CHECK(pred[j] >= 0.0);
      CHECK(pred[j] <= cfg.caps_bps[j % 4]);
    }
  }
}

TEST_CASE("antenna permutation equivariance") {
  ModelConfig cfg = small_config(5e8);
  cfg.window = 6;
  nn::ParamStore p = init_params(cfg, 23);
  Rng rng(4);
  const Tensor w = random_windows(5, cfg, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};

  SUBCASE("equal embeddings") {
    Tensor& e = p.value("antenna_embedding");
    for (std::size_t i = 1; i < 4; ++i)
      for (std::size_t k = 0; k < 8; ++k) e[i * 8 + k] = e[k];
    const Tensor a = predict(p, cfg, w);
    const Tensor b = predict(p, cfg, permute_antennas(w, perm));
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t i = 0; i < 4; ++i) {
        const double x = a[s * 4 + perm[i]], y = b[s * 4 + i];
        CHECK(std::abs(x - y) <= 1e-9 * std::max(std::abs(x), 1e-300));
      }
  }
  SUBCASE("embeddings permuted with the input") {
    cfg.caps_bps = {5e8, 6e8, 7e8, 8e8};
    const Tensor a = predict(p, cfg, w);
    nn::ParamStore q = p;
    ModelConfig cq = cfg;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < 8; ++k) q.value("antenna_embedding")[i * 8 + k] = p.value("antenna_embedding")[perm[i] * 8 + k];
      cq.caps_bps[i] = cfg.caps_bps[perm[i]];
    }
    const Tensor b = predict(q, cq, permute_antennas(w, perm));
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t i = 0; i < 4; ++i) {
        const double x = a[s * 4 + perm[i]], y = b[s * 4 + i];
        CHECK(std::abs(x - y) <= 1e-9 * std::max(std::abs(x), 1e-300));
      }
  }
}

TEST_CASE("series predictions are causal and ignore unmeasured slots") {
  ModelConfig cfg = default_model();
  cfg.window = 8;
  cfg.embed_dim = 16;
  cfg.heads = 2;
  const auto links = channel::default_links();
  const nn::ParamStore p = init_params(cfg, 31);
  auto routes = masked_routes(1, 60, 9);
  const auto base = predict_series(routes[0], links, p, cfg, 7);
  CHECK(base.size() == (60 - 8) * 4);
  CHECK(predict_series(routes[0], links, p, cfg, 64) == base);

  const std::size_t t0 = 30;
  channel::TraceSet changed = routes[0];
  for (std::size_t t = t0; t < 60; ++t)
    for (std::size_t i = 0; i < 4; ++i) {
      changed.mask[changed.at(t, i)] = 1;
      changed.obs_snr_db[changed.at(t, i)] = -3.0 + static_cast<double>(t % 7);
    }
  const auto after = predict_series(changed, links, p, cfg);
  for (std::size_t t = 8; t <= t0; ++t)
    for (std::size_t i = 0; i < 4; ++i) CHECK(after[(t - 8) * 4 + i] == base[(t - 8) * 4 + i]);
  bool any_diff = false;
  for (std::size_t j = (t0 + 1 - 8) * 4; j < after.size(); ++j) any_diff = any_diff || after[j] != base[j];
  CHECK(any_diff);

  channel::TraceSet junk = routes[0];
  for (std::size_t j = 0; j < junk.mask.size(); ++j)
    if (!junk.mask[j]) junk.obs_snr_db[j] = 123.0;
  CHECK(predict_series(junk, links, p, cfg) == base);

  channel::TraceSet shorty = routes[0];
  shorty.steps = 8;
  CHECK_THROWS_AS(predict_series(shorty, links, p, cfg), std::invalid_argument);
}

TEST_CASE("forward rejects mismatched windows") {
  const ModelConfig cfg = small_config();
  nn::ParamStore p = init_params(cfg, 1);
  nn::Tape tape;
  CHECK_THROWS_AS(forward(tape, p, cfg, tape.constant(Tensor(Shape{2, 5, 4, 3})), false, nullptr),
                  nn::ShapeError);
  CHECK_THROWS_AS(forward(tape, p, cfg, tape.constant(Tensor(Shape{4, 4, 3})), false, nullptr),
                  nn::ShapeError);
}

TEST_CASE("mse loss in rate units") {
  nn::Tape tape;
  CHECK(mse_loss(tape.constant(Tensor(Shape{1}, 2.0)), Tensor(Shape{1}, 0.0)).value().item() == 4.0);
  const Tensor t(Shape{2, 2}, std::vector<double>{1, 2, 3, 4});
  CHECK(mse_loss(tape.constant(t), t).value().item() == 0.0);
  const Tensor pa(Shape{2}, std::vector<double>{1.5, 0.25}), ta(Shape{2}, std::vector<double>{0.5, 1.0});
  const Tensor pb(Shape{2}, std::vector<double>{15.0, 2.5}), tb(Shape{2}, std::vector<double>{5.0, 10.0});
  CHECK(mse_loss(tape.constant(pb), tb).value().item() ==
        doctest::Approx(100.0 * mse_loss(tape.constant(pa), ta).value().item()).epsilon(1e-14));
  CHECK_THROWS_AS(mse_loss(tape.constant(t), Tensor(Shape{4})), nn::ShapeError);
}

TEST_CASE("save and load reproduce the forward pass bit for bit") {
  const ModelConfig cfg = default_model();
  const nn::ParamStore p = init_params(cfg, 77);
  const auto file = std::filesystem::temp_directory_path() / "ratepred_predictor_roundtrip.json";
  nn::save_model(file, p, to_json(cfg));
  nlohmann::json stored;
  const nn::ParamStore q = nn::load_model(file, &stored);
  std::filesystem::remove(file);
  const ModelConfig cfg2 = model_config_from_json(stored);
  CHECK(cfg2 == cfg);
  Rng rng(3);
  const Tensor w = random_windows(16, cfg, rng);
  CHECK(predict(q, cfg2, w) == predict(p, cfg, w));
}

TEST_CASE("training") {
  const auto links = channel::default_links();
  ModelConfig cfg = default_model();
  cfg.window = 5;
  cfg.embed_dim = 8;
  cfg.heads = 2;
  cfg.ffn_dim = 16;
  cfg.head_hidden = 16;
  TrainConfig tc;
  tc.batch_size = 32;

  SUBCASE("constant rates are learned") {
    // Stationary link conditions, every link measured every step.
    cfg.dropout = 0.0;
    tc.batch_size = 16;
    auto cc = channel::default_channel_config();
    cc.steps = 100;
    std::vector<channel::TraceSet> routes;
    for (std::size_t r = 0; r < 5; ++r) {
      routes.push_back(channel::simulate_route(cc, channel::mobility_medium(), r));
      for (std::size_t j = 0; j < routes[r].snr_db.size(); ++j) {
        routes[r].snr_db[j] = 5.0;
        routes[r].rate_bps[j] = measure::rate_from_snr_db(5.0, links[j % 4]);
      }
    }
    measure::build_masked_dataset(routes, links, measure::BanditParams{0.2, 0.1, 4, 0.0}, 7);
    tc.epochs = 50;
    const auto res = train(std::span(routes).first(4), std::span(routes).last(1), links, cfg, tc);
    CHECK(res.log.size() == 50);
    CHECK(res.best_val_loss < 1e-6);
    CHECK(evaluate_loss(res.params, cfg, std::span(routes).last(1), links) == res.best_val_loss);
  }
  SUBCASE("same seed, same losses") {
    auto routes = masked_routes(3, 50, 41);
    tc.epochs = 1;
    const auto a = train(std::span(routes).first(2), std::span(routes).last(1), links, cfg, tc);
    const auto b = train(std::span(routes).first(2), std::span(routes).last(1), links, cfg, tc);
    CHECK(a.log[0].train_loss == b.log[0].train_loss);
    CHECK(a.log[0].val_loss == b.log[0].val_loss);
    tc.seed = 2;
    const auto c = train(std::span(routes).first(2), std::span(routes).last(1), links, cfg, tc);
    CHECK(c.log[0].train_loss != a.log[0].train_loss);
  }
  SUBCASE("best validation epoch is returned") {
    auto routes = masked_routes(3, 50, 42);
    tc.epochs = 4;
    const auto res = train(std::span(routes).first(2), std::span(routes).last(1), links, cfg, tc);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : res.log) best = std::min(best, e.val_loss);
    CHECK(res.best_val_loss == best);
    CHECK(res.log[res.best_epoch].val_loss == best);
    CHECK(evaluate_loss(res.params, cfg, std::span(routes).last(1), links) == best);
  }
  SUBCASE("empty splits are rejected") {
    auto routes = masked_routes(1, 30, 43);
    CHECK_THROWS_AS(train({}, routes, links, cfg, tc), std::invalid_argument);
    CHECK_THROWS_AS(train(routes, {}, links, cfg, tc), std::invalid_argument);
  }
}
