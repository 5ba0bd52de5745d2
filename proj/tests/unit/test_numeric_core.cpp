#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "ratepred/nn/adam.hpp"
#include "ratepred/nn/gradcheck.hpp"
#include "ratepred/nn/ops.hpp"
#include "ratepred/nn/serialize.hpp"
#include "ratepred/rng.hpp"

using namespace ratepred;
using namespace ratepred::nn;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    v = rng.uniform(lo, hi);
  }
  return t;
}

}  // namespace

TEST_CASE("softmax of a constant row is uniform") {
  Tape tape;
  Var y = softmax_lastdim(tape.constant(Tensor(Shape{3}, std::vector<double>{0, 0, 0})));
  for (double v : y.value().data()) {
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("softmax rows sum to one and stay in [0, 1]") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    const std::size_t d = 1 + rng.below(9);
    Var y = softmax_lastdim(tape.constant(random_tensor({5, d}, rng, -50.0, 50.0)));
    for (std::size_t r = 0; r < 5; ++r) {
      double total = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double v = y.value()[r * d + i];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("softplus at zero is ln 2 and positive everywhere") {
  Tape tape;
  Var y = softplus(tape.constant(Tensor::scalar(0.0)));
  CHECK(y.value().item() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));

  Tensor wide(Shape{7}, std::vector<double>{-1e308, -800.0, -40.0, -1e-9, 3.0, 800.0, 1e308});
  Var z = softplus(tape.constant(wide));
  for (double v : z.value().data()) {
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("layer_norm of a constant vector is zero before the affine part") {
  Tape tape;
  Var x = tape.constant(Tensor(Shape{2, 4}, 3.5));
  Var y = layer_norm(x, tape.constant(Tensor(Shape{4}, 1.0)), tape.constant(Tensor(Shape{4}, 0.0)));
  for (double v : y.value().data()) {
    CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("conv1d_time with an identity kernel reproduces the input") {
  Rng rng(5);
  Tape tape;
  const Tensor x = random_tensor({3, 7, 4}, rng);
  Tensor kernel(Shape{3, 4, 4});
  for (std::size_t c = 0; c < 4; ++c) {
    kernel[(1 * 4 + c) * 4 + c] = 1.0;  // centre tap
  }
  Var y = conv1d_time(tape.constant(x), tape.constant(kernel), tape.constant(Tensor(Shape{4})));
  CHECK(y.value() == x);
}

TEST_CASE("shape mismatches name the op and both shapes") {
  Tape tape;
  Var a = tape.constant(Tensor(Shape{2, 3}));
  Var b = tape.constant(Tensor(Shape{4, 5}));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[4, 5]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(concat({a, b}, 1), ShapeError);
  CHECK_THROWS_AS(reshape(a, {7}), ShapeError);
}

TEST_CASE("backward of sum of squares") {
  ParamStore store;
  store.add("theta", Tensor(Shape{2}, std::vector<double>{1.0, -2.0}));
  store.zero_grad();
  {
    Tape tape;
    Var t = tape.param(store, "theta");
    tape.backward(sum_all(multiply(t, t)));
  }
  CHECK(store.grad("theta")[0] == 2.0);
  CHECK(store.grad("theta")[1] == -4.0);

  SUBCASE("a second backward without zeroing accumulates") {
    Tape tape;
    Var t = tape.param(store, "theta");
    tape.backward(sum_all(multiply(t, t)));
    CHECK(store.grad("theta")[0] == 4.0);
    CHECK(store.grad("theta")[1] == -8.0);
  }
}

TEST_CASE("a loss independent of a parameter leaves its gradient exactly zero") {
  ParamStore store;
  store.add("used", Tensor(Shape{3}, 0.5));
  store.add("unused", Tensor(Shape{2}, 0.7));
  store.zero_grad();
  Tape tape;
  Var u = tape.param(store, "used");
  tape.param(store, "unused");
  tape.backward(sum_all(softplus(u)));
  for (double g : store.grad("unused").data()) {
    CHECK(g == 0.0);
  }
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tape tape;
  Var v = tape.variable(Tensor(Shape{2}, 1.0));
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
}

TEST_CASE("dropout: inverted scaling in training, identity otherwise") {
  Rng rng(3);
  Tape tape;
  Var x = tape.constant(Tensor(Shape{20000}, 1.0));
  Var eval = dropout(x, 0.2, rng, false);
  CHECK(eval.id == x.id);
  Var zero = dropout(x, 0.0, rng, true);
  CHECK(zero.id == x.id);
  Var tr = dropout(x, 0.2, rng, true);
  double total = 0.0;
  for (double v : tr.value().data()) {
    CHECK((v == 0.0 || v == doctest::Approx(1.25)));
    total += v;
  }
  CHECK(total / 20000.0 == doctest::Approx(1.0).epsilon(0.02));
}

// Random graphs of depth <= 10 over every differentiable op, checked against
// central differences.
TEST_CASE("reverse-mode gradients match finite differences on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    ParamStore store;
    store.add("x", random_tensor({2, 3, 4}, rng));
    store.add("w", random_tensor({4, 4}, rng));
    store.add("v", random_tensor({4}, rng));
    store.add("u", random_tensor({4}, rng));
    store.add("k", random_tensor({3, 4, 4}, rng, -0.5, 0.5));
    store.add("r", random_tensor({3, 4}, rng));
    store.add("c", random_tensor({8, 4}, rng, -0.5, 0.5));
    const Tensor weights = random_tensor({2, 3, 4}, rng);
    const Tensor cap = random_tensor({4}, rng, 0.5, 2.0);

    const int depth = 1 + static_cast<int>(rng.below(10));
    std::vector<int> kinds;
    for (int i = 0; i < depth; ++i) {
      kinds.push_back(static_cast<int>(rng.below(14)));
    }

    auto closure = [&](Tape& tape, ParamStore& ps) {
      Var h = tape.param(ps, "x");
      Var w = tape.param(ps, "w");
      Var v = tape.param(ps, "v");
      Var u = tape.param(ps, "u");
      Rng unused(0);
      for (int kind : kinds) {
        switch (kind) {
          case 0: h = matmul(h, w); break;
          case 1: h = add(h, v); break;
          case 2: h = multiply(h, v); break;
          case 3: h = softplus(h); break;
          case 4: h = layer_norm(h, v, u); break;
          case 5: h = softmax_lastdim(h); break;
          case 6: h = conv1d_time(h, tape.param(ps, "k"), u); break;
          case 7: h = matmul(concat({h, scale(h, 0.5)}, 2), tape.param(ps, "c")); break;
          case 8: h = affine_per_feature(h, v, u); break;
          case 9: h = permute(permute(h, {1, 0, 2}), {1, 0, 2}); break;
          case 10: h = relu(add(h, u)); break;
          case 11: h = elementwise_min_const(h, cap); break;
          case 12: h = matmul(matmul(h, transpose_last2(h)), tape.param(ps, "r")); break;
          default: h = dropout(sub(h, scale(h, 0.25)), 0.0, unused, true); break;
        }
      }
      Var m = mean_over_axis(h, 1);
      return add(sum_all(multiply(h, tape.constant(weights))), mean_all(multiply(m, m)));
    };
    const GradCheckReport report = gradient_check(closure, store);
    INFO("trial " << trial << " depth " << depth << " max rel " << report.max_rel_error);
    CHECK(report.passed);
  }
}

TEST_CASE("gradient_check: quadratic, zero tolerance, nondeterminism") {
  ParamStore store;
  store.add("theta", Tensor(Shape{3}, std::vector<double>{0.3, -1.2, 2.5}));
  auto quadratic = [](Tape& tape, ParamStore& ps) {
    Var t = tape.param(ps, "theta");
    return sum_all(multiply(t, t));
  };
  const auto report = gradient_check(quadratic, store);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-6);

  auto curved = [](Tape& tape, ParamStore& ps) {
    Var t = tape.param(ps, "theta");
    return sum_all(softplus(multiply(t, softplus(t))));
  };
  GradCheckOptions strict;
  strict.tolerance = 0.0;
  CHECK_FALSE(gradient_check(curved, store, strict).passed);

  int calls = 0;
  auto flaky = [&calls](Tape& tape, ParamStore& ps) {
    Var t = tape.param(ps, "theta");
    return scale(sum_all(t), 1.0 + static_cast<double>(calls++));
  };
  CHECK_THROWS_AS(gradient_check(flaky, store), NonDeterministicClosure);
}

TEST_CASE("first Adam step moves each parameter by about lr against the gradient sign") {
  ParamStore store;
  store.add("a", Tensor(Shape{4}, std::vector<double>{1.0, 1.0, -3.0, 0.0}));
  store.zero_grad();
  auto& g = store.entry("a").grad;
  g[0] = 0.37;
  g[1] = -5e3;
  g[2] = 1e-2;
  g[3] = 0.0;
  AdamState state(store, AdamConfig{});
  const Tensor before = store.value("a");
  adam_step(store, state);
  CHECK(state.step() == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    // Closed form: delta = -lr * g / (|g| + eps).
    const double expected = -1e-3 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(store.value("a")[i] - before[i] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(std::abs(store.value("a")[i] - before[i]) - 1e-3) <= 1e-3 * 1e-8 / std::abs(g[i]) + 1e-15);
  }
  CHECK(store.value("a")[3] == before[3]);
  for (double v : state.second_moment("a").data()) {
    CHECK(v >= 0.0);
  }
}

TEST_CASE("Adam: zero gradients leave parameters unchanged; identical inputs update identically") {
  ParamStore store;
  store.add("p", Tensor(Shape{2}, 0.25));
  store.add("q", Tensor(Shape{2}, 0.25));
  store.zero_grad();
  AdamState state(store, AdamConfig{});
  adam_step(store, state);
  CHECK(store.value("p")[0] == 0.25);
  store.entry("p").grad.fill(0.8);
  store.entry("q").grad.fill(0.8);
  for (int i = 0; i < 5; ++i) {
    adam_step(store, state);
  }
  CHECK(store.value("p") == store.value("q"));
}

TEST_CASE("Adam rejects parameters without gradients") {
  ParamStore store;
  store.add("p", Tensor(Shape{2}, 0.25));
  AdamState state(store, AdamConfig{});
  CHECK_THROWS_AS(adam_step(store, state), std::invalid_argument);
  store.zero_grad();
  store.add("late", Tensor(Shape{1}, 1.0));
  store.zero_grad();
  CHECK_THROWS_AS(adam_step(store, state), std::invalid_argument);
}

TEST_CASE("ParamStore rejects duplicate paths") {
  ParamStore store;
  store.add("a", Tensor(Shape{1}));
  CHECK_THROWS_AS(store.add("a", Tensor(Shape{1})), std::invalid_argument);
}

TEST_CASE("model JSON round-trips every double bit-for-bit") {
  Rng rng(99);
  ParamStore store;
  Tensor t(Shape{64});
  for (double& v : t.data()) {
    double x;
    do {
      x = std::bit_cast<double>(rng.next_u64());
    } while (!std::isfinite(x));
    v = x;
  }
  t[0] = 1.0 / 3.0;
  t[1] = -0.0;
  t[2] = 5e-324;
  store.add("layer.weight", t);
  store.add("layer.bias", random_tensor({2, 3}, rng));
  const nlohmann::json cfg = {{"window", 20}};
  const std::string text = params_to_json(store, cfg).dump();
  nlohmann::json loaded_cfg;
  const ParamStore back = params_from_json(nlohmann::json::parse(text), &loaded_cfg);
  CHECK(loaded_cfg == cfg);
  for (const auto& [path, e] : store) {
    const Tensor& other = back.value(path);
    REQUIRE(other.shape() == e.value.shape());
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      CHECK(std::bit_cast<std::uint64_t>(other[i]) == std::bit_cast<std::uint64_t>(e.value[i]));
    }
  }
}
