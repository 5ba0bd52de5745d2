#pragma once

#include <cstddef>
#include <vector>

#include "ratepred/nn/tape.hpp"
#include "ratepred/rng.hpp"

// Differentiable operations. Every function records its result on the tape
// of its operands and throws ShapeError naming the op and the offending
// shapes. "Suffix broadcast" means the second operand's shape equals the
// trailing dimensions of the first and is repeated over the leading ones.
namespace ratepred::nn {

/// a [..., n, k] times b [k, m] (shared weight) or b [..., k, m] (batched,
/// same leading dims).
Var matmul(Var a, Var b);
Var transpose_last2(Var a);

/// Elementwise with suffix broadcast of b.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var multiply(Var a, Var b);
Var scale(Var a, double factor);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var reshape(Var a, Shape shape);
Var permute(Var a, const std::vector<std::size_t>& order);

/// x [N, T, Cin], kernel [K, Cin, Cout] (K odd), bias [Cout] -> [N, T, Cout].
/// Zero padding keeps the time length.
Var conv1d_time(Var x, Var kernel, Var bias);

Var relu(Var a);
Var softplus(Var a);

inline constexpr double kLayerNormEps = 1e-5;
/// Normalizes over the last dimension, then applies gain and bias of that size.
Var layer_norm(Var x, Var gain, Var bias, double eps = kLayerNormEps);
Var softmax_lastdim(Var a);

/// Mean over one axis; the axis is removed from the result shape.
Var mean_over_axis(Var a, std::size_t axis);
Var sum_all(Var a);
Var mean_all(Var a);

/// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when
/// `train` is false or p == 0.
Var dropout(Var a, double p, Rng& rng, bool train);

/// min(a, cap) with cap suffix-broadcast. Gradient passes where a < cap.
Var elementwise_min_const(Var a, const Tensor& cap);

/// x * scale + shift with scale/shift sized to the last dimension of x.
Var affine_per_feature(Var x, Var scale, Var shift);

}  // namespace ratepred::nn
