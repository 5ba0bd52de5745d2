#include "ratepred/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace ratepred::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Tape& tape_of(Var a, Var b, const char* kind) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument(std::string(kind) + ": operands are on different tapes");
  }
  return *a.tape;
}

Tape& tape_of(Var a) {
  if (a.tape == nullptr) {
    throw std::invalid_argument("operand is not attached to a tape");
  }
  return *a.tape;
}

bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) {
    return false;
  }
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

Var add_scaled(Var a, Var b, double sign, const char* kind) {
  Tape& tape = tape_of(a, b, kind);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!is_suffix(A.shape(), B.shape())) {
    throw ShapeError(kind, A.shape(), B.shape());
  }
  const std::size_t n = A.size();
  const std::size_t m = B.size();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = A[i] + sign * B[i % m];
  }
  return tape.record(std::move(out), {a, b}, [a, b, m, sign](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_sink(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        (*ga)[i] += g[i];
      }
    }
    if (Tensor* gb = t.grad_sink(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        (*gb)[i % m] += sign * g[i];
      }
    }
  });
}

// Splits a shape around `axis` into (outer, length, inner) element counts.
struct AxisSplit {
  std::size_t outer;
  std::size_t length;
  std::size_t inner;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) {
    r.outer *= s[i];
  }
  for (std::size_t i = axis + 1; i < s.size(); ++i) {
    r.inner *= s[i];
  }
  return r;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() < 2 || B.rank() < 2) {
    throw ShapeError("matmul", A.shape(), B.shape());
  }
  const std::size_t n = A.dim(A.rank() - 2);
  const std::size_t k = A.dim(A.rank() - 1);
  if (B.dim(B.rank() - 2) != k) {
    throw ShapeError("matmul", A.shape(), B.shape());
  }
  const std::size_t m = B.dim(B.rank() - 1);
  Shape out_shape = A.shape();
  out_shape.back() = m;

  if (B.rank() == 2) {
    const auto rows = static_cast<Eigen::Index>(A.size() / k);
    const auto kk = static_cast<Eigen::Index>(k);
    const auto mm = static_cast<Eigen::Index>(m);
    Tensor out(out_shape);
    MapMat(out.ptr(), rows, mm).noalias() = ConstMapMat(A.ptr(), rows, kk) * ConstMapMat(B.ptr(), kk, mm);
    return tape.record(std::move(out), {a, b}, [a, b, rows, kk, mm](Tape& t, const Tensor& g) {
      ConstMapMat G(g.ptr(), rows, mm);
      if (Tensor* ga = t.grad_sink(a)) {
        MapMat(ga->ptr(), rows, kk).noalias() += G * ConstMapMat(b.value().ptr(), kk, mm).transpose();
      }
      if (Tensor* gb = t.grad_sink(b)) {
        MapMat(gb->ptr(), kk, mm).noalias() += ConstMapMat(a.value().ptr(), rows, kk).transpose() * G;
      }
    });
  }

  if (A.rank() != B.rank() ||
      !std::equal(A.shape().begin(), A.shape().end() - 2, B.shape().begin())) {
    throw ShapeError("matmul", A.shape(), B.shape());
  }
  const std::size_t batch = A.size() / (n * k);
  Tensor out(out_shape);
  for (std::size_t p = 0; p < batch; ++p) {
    const double* ap = A.ptr() + p * n * k;
    const double* bp = B.ptr() + p * k * m;
    double* op = out.ptr() + p * n * m;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t q = 0; q < k; ++q) {
          acc += ap[i * k + q] * bp[q * m + j];
        }
        op[i * m + j] = acc;
      }
    }
  }
  return tape.record(std::move(out), {a, b}, [a, b, batch, n, k, m](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    Tensor* ga = t.grad_sink(a);
    Tensor* gb = t.grad_sink(b);
    for (std::size_t p = 0; p < batch; ++p) {
      const double* gp = g.ptr() + p * n * m;
      const double* ap = A.ptr() + p * n * k;
      const double* bp = B.ptr() + p * k * m;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          const double gij = gp[i * m + j];
          for (std::size_t q = 0; q < k; ++q) {
            if (ga != nullptr) {
              (*ga)[p * n * k + i * k + q] += gij * bp[q * m + j];
            }
            if (gb != nullptr) {
              (*gb)[p * k * m + q * m + j] += gij * ap[i * k + q];
            }
          }
        }
      }
    }
  });
}

Var transpose_last2(Var a) {
  const std::size_t r = a.value().rank();
  if (r < 2) {
    throw ShapeError("transpose_last2: need rank >= 2, got " + to_string(a.shape()));
  }
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::swap(order[r - 1], order[r - 2]);
  return permute(a, order);
}

Var add(Var a, Var b) { return add_scaled(a, b, 1.0, "add"); }

Var sub(Var a, Var b) { return add_scaled(a, b, -1.0, "sub"); }

Var multiply(Var a, Var b) {
  Tape& tape = tape_of(a, b, "multiply");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!is_suffix(A.shape(), B.shape())) {
    throw ShapeError("multiply", A.shape(), B.shape());
  }
  const std::size_t m = B.size();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    out[i] = A[i] * B[i % m];
  }
  return tape.record(std::move(out), {a, b}, [a, b, m](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (Tensor* ga = t.grad_sink(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        (*ga)[i] += g[i] * B[i % m];
      }
    }
    if (Tensor* gb = t.grad_sink(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        (*gb)[i % m] += g[i] * A[i];
      }
    }
  });
}

Var scale(Var a, double factor) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  out.set_requires_grad(false);
  for (double& v : out.data()) {
    v *= factor;
  }
  return tape.record(std::move(out), {a}, [a, factor](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      (*ga)[i] += factor * g[i];
    }
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) {
    throw ShapeError("concat: no operands");
  }
  Tape& tape = tape_of(parts.front());
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                     to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (Var p : parts) {
    tape_of(parts.front(), p, "concat");
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      ok = i == axis || s[i] == first[i];
    }
    if (!ok) {
      throw ShapeError("concat", first, s);
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit os = split_at(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    const std::size_t len = v.dim(axis);
    for (std::size_t o = 0; o < os.outer; ++o) {
      std::copy_n(v.ptr() + o * len * os.inner, len * os.inner,
                  out.ptr() + (o * os.length + offset) * os.inner);
    }
    offsets.push_back(offset);
    offset += len;
  }
  return tape.record(std::move(out), parts, [parts, offsets, os, axis](Tape& t, const Tensor& g) {
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
      Tensor* gp = t.grad_sink(parts[pi]);
      if (gp == nullptr) {
        continue;
      }
      const std::size_t chunk = parts[pi].value().dim(axis) * os.inner;
      for (std::size_t o = 0; o < os.outer; ++o) {
        const double* src = g.ptr() + (o * os.length + offsets[pi]) * os.inner;
        double* dst = gp->ptr() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) {
          dst[i] += src[i];
        }
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tape& tape = tape_of(a);
  if (numel(shape) != a.value().size()) {
    throw ShapeError("reshape", a.shape(), shape);
  }
  Tensor out(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
  return tape.record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      (*ga)[i] += g[i];
    }
  });
}

Var permute(Var a, const std::vector<std::size_t>& order) {
  Tape& tape = tape_of(a);
  const Shape& in = a.shape();
  const std::size_t r = in.size();
  std::vector<bool> seen(r, false);
  bool ok = order.size() == r;
  for (std::size_t i = 0; ok && i < r; ++i) {
    ok = order[i] < r && !seen[order[i]];
    if (ok) {
      seen[order[i]] = true;
    }
  }
  if (!ok) {
    throw ShapeError("permute", in, Shape(order.begin(), order.end()));
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) {
    in_stride[i - 1] = in_stride[i] * in[i];
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = in[order[i]];
  }
  // source[j] is the input offset of output element j
  auto source = std::make_shared<std::vector<std::size_t>>(a.value().size());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t j = 0; j < source->size(); ++j) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) {
      off += idx[d] * in_stride[order[d]];
    }
    (*source)[j] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) {
        break;
      }
      idx[d] = 0;
    }
  }
  Tensor out(out_shape);
  const Tensor& A = a.value();
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = A[(*source)[j]];
  }
  return tape.record(std::move(out), {a}, [a, source](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t j = 0; j < g.size(); ++j) {
      (*ga)[(*source)[j]] += g[j];
    }
  });
}

Var conv1d_time(Var x, Var kernel, Var bias) {
  Tape& tape = tape_of(x, kernel, "conv1d_time");
  tape_of(x, bias, "conv1d_time");
  const Tensor& X = x.value();
  const Tensor& K = kernel.value();
  const Tensor& Bv = bias.value();
  if (X.rank() != 3 || K.rank() != 3 || K.dim(0) % 2 == 0 || K.dim(1) != X.dim(2)) {
    throw ShapeError("conv1d_time", X.shape(), K.shape());
  }
  if (Bv.rank() != 1 || Bv.dim(0) != K.dim(2)) {
    throw ShapeError("conv1d_time", K.shape(), Bv.shape());
  }
  const std::size_t n = X.dim(0);
  const std::size_t steps = X.dim(1);
  const std::size_t cin = X.dim(2);
  const std::size_t taps = K.dim(0);
  const std::size_t cout = K.dim(2);
  const std::size_t pad = taps / 2;
  const std::size_t width = taps * cin;

  // im2col: row (n, t) holds x[n, t + k - pad, :] for k = 0..taps-1.
  auto cols = std::make_shared<Buffer>(n * steps * width, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < steps; ++t) {
      double* row = cols->data() + (s * steps + t) * width;
      for (std::size_t k = 0; k < taps; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) {
          continue;
        }
        std::copy_n(X.ptr() + (s * steps + static_cast<std::size_t>(src)) * cin, cin, row + k * cin);
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(n * steps);
  const auto w = static_cast<Eigen::Index>(width);
  const auto co = static_cast<Eigen::Index>(cout);
  Tensor out(Shape{n, steps, cout});
  MapMat O(out.ptr(), rows, co);
  O.noalias() = ConstMapMat(cols->data(), rows, w) * ConstMapMat(K.ptr(), w, co);
  O.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(Bv.ptr(), co);

  return tape.record(std::move(out), {x, kernel, bias},
                     [x, kernel, bias, cols, n, steps, cin, taps, pad, rows, w, co](Tape& t, const Tensor& g) {
    ConstMapMat G(g.ptr(), rows, co);
    if (Tensor* gk = t.grad_sink(kernel)) {
      MapMat(gk->ptr(), w, co).noalias() += ConstMapMat(cols->data(), rows, w).transpose() * G;
    }
    if (Tensor* gb = t.grad_sink(bias)) {
      Eigen::Map<Eigen::RowVectorXd>(gb->ptr(), co) += G.colwise().sum();
    }
    if (Tensor* gx = t.grad_sink(x)) {
      RowMat dcols = G * ConstMapMat(kernel.value().ptr(), w, co).transpose();
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t tt = 0; tt < steps; ++tt) {
          const double* row = dcols.data() + (s * steps + tt) * static_cast<std::size_t>(w);
          for (std::size_t k = 0; k < taps; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt + k) - static_cast<std::ptrdiff_t>(pad);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) {
              continue;
            }
            double* dst = gx->ptr() + (s * steps + static_cast<std::size_t>(src)) * cin;
            for (std::size_t c = 0; c < cin; ++c) {
              dst[c] += row[k * cin + c];
            }
          }
        }
      }
    }
  });
}

Var relu(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    out[i] = A[i] > 0.0 ? A[i] : 0.0;
  }
  return tape.record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    Tensor* ga = t.grad_sink(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (A[i] > 0.0) {
        (*ga)[i] += g[i];
      }
    }
  });
}

Var softplus(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double v = A[i];
    // Clamp keeps the output strictly positive where exp() underflows.
    out[i] = std::max(std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))),
                      std::numeric_limits<double>::denorm_min());
  }
  return tape.record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    Tensor* ga = t.grad_sink(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = A[i];
      const double sig = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      (*ga)[i] += g[i] * sig;
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& tape = tape_of(x, gain, "layer_norm");
  tape_of(x, bias, "layer_norm");
  const Tensor& X = x.value();
  const std::size_t d = X.shape().empty() ? 0 : X.shape().back();
  if (d == 0 || gain.value().shape() != Shape{d}) {
    throw ShapeError("layer_norm", X.shape(), gain.shape());
  }
  if (bias.value().shape() != Shape{d}) {
    throw ShapeError("layer_norm", X.shape(), bias.shape());
  }
  const std::size_t rows = X.size() / d;
  const Tensor& G = gain.value();
  const Tensor& Bv = bias.value();
  auto xhat = std::make_shared<std::vector<double>>(X.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  Tensor out(X.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.ptr() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      mean += xr[i];
    }
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      var += (xr[i] - mean) * (xr[i] - mean);
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (xr[i] - mean) * is;
      (*xhat)[r * d + i] = h;
      out[r * d + i] = h * G[i] + Bv[i];
    }
  }
  return tape.record(std::move(out), {x, gain, bias},
                     [x, gain, bias, xhat, inv_std, rows, d](Tape& t, const Tensor& g) {
    const Tensor& G = gain.value();
    Tensor* gx = t.grad_sink(x);
    Tensor* gg = t.grad_sink(gain);
    Tensor* gb = t.grad_sink(bias);
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g.ptr() + r * d;
      const double* hr = xhat->data() + r * d;
      if (gg != nullptr || gb != nullptr) {
        for (std::size_t i = 0; i < d; ++i) {
          if (gg != nullptr) {
            (*gg)[i] += gr[i] * hr[i];
          }
          if (gb != nullptr) {
            (*gb)[i] += gr[i];
          }
        }
      }
      if (gx != nullptr) {
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double dh = gr[i] * G[i];
          mean_dh += dh;
          mean_dh_h += dh * hr[i];
        }
        mean_dh *= inv_d;
        mean_dh_h *= inv_d;
        for (std::size_t i = 0; i < d; ++i) {
          const double dh = gr[i] * G[i];
          (*gx)[r * d + i] += (*inv_std)[r] * (dh - mean_dh - hr[i] * mean_dh_h);
        }
      }
    }
  });
}

Var softmax_lastdim(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  if (A.rank() == 0) {
    throw ShapeError("softmax_lastdim: need rank >= 1");
  }
  const std::size_t d = A.shape().back();
  const std::size_t rows = A.size() / d;
  auto y = std::make_shared<Tensor>(A.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = A.ptr() + r * d;
    double* yr = y->ptr() + r * d;
    const double mx = *std::max_element(ar, ar + d);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      yr[i] = std::exp(ar[i] - mx);
      total += yr[i];
    }
    for (std::size_t i = 0; i < d; ++i) {
      yr[i] /= total;
    }
  }
  Tensor out = *y;
  return tape.record(std::move(out), {a}, [a, y, rows, d](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = y->ptr() + r * d;
      const double* gr = g.ptr() + r * d;
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        dot += gr[i] * yr[i];
      }
      for (std::size_t i = 0; i < d; ++i) {
        (*ga)[r * d + i] += yr[i] * (gr[i] - dot);
      }
    }
  });
}

Var mean_over_axis(Var a, std::size_t axis) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  if (axis >= A.rank()) {
    throw ShapeError("mean_over_axis: axis " + std::to_string(axis) + " out of range for " +
                     to_string(A.shape()));
  }
  const AxisSplit sp = split_at(A.shape(), axis);
  Shape out_shape = A.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  const double inv = 1.0 / static_cast<double>(sp.length);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t l = 0; l < sp.length; ++l) {
      const double* src = A.ptr() + (o * sp.length + l) * sp.inner;
      double* dst = out.ptr() + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) {
        dst[i] += src[i];
      }
    }
  }
  for (double& v : out.data()) {
    v *= inv;
  }
  return tape.record(std::move(out), {a}, [a, sp, inv](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t l = 0; l < sp.length; ++l) {
        double* dst = ga->ptr() + (o * sp.length + l) * sp.inner;
        const double* src = g.ptr() + o * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) {
          dst[i] += src[i] * inv;
        }
      }
    }
  });
}

Var sum_all(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  double total = 0.0;
  for (double v : A.data()) {
    total += v;
  }
  return tape.record(Tensor::scalar(total), {a}, [a](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (double& v : ga->data()) {
      v += g[0];
    }
  });
}

Var mean_all(Var a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size())); }

Var dropout(Var a, double p, Rng& rng, bool train) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: probability must lie in [0, 1)");
  }
  if (!train || p == 0.0) {
    return a;
  }
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  auto mask = std::make_shared<std::vector<double>>(A.size());
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    (*mask)[i] = rng.uniform() >= p ? keep_scale : 0.0;
    out[i] = A[i] * (*mask)[i];
  }
  return tape.record(std::move(out), {a}, [a, mask](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      (*ga)[i] += g[i] * (*mask)[i];
    }
  });
}

Var elementwise_min_const(Var a, const Tensor& cap) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  if (!is_suffix(A.shape(), cap.shape())) {
    throw ShapeError("elementwise_min_const", A.shape(), cap.shape());
  }
  const std::size_t m = cap.size();
  auto pass = std::make_shared<std::vector<bool>>(A.size());
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double c = cap[i % m];
    (*pass)[i] = A[i] < c;
    out[i] = (*pass)[i] ? A[i] : c;
  }
  return tape.record(std::move(out), {a}, [a, pass](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_sink(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if ((*pass)[i]) {
        (*ga)[i] += g[i];
      }
    }
  });
}

Var affine_per_feature(Var x, Var scale_v, Var shift) {
  Tape& tape = tape_of(x, scale_v, "affine_per_feature");
  tape_of(x, shift, "affine_per_feature");
  const Tensor& X = x.value();
  const std::size_t f = X.shape().empty() ? 0 : X.shape().back();
  if (f == 0 || scale_v.value().shape() != Shape{f}) {
    throw ShapeError("affine_per_feature", X.shape(), scale_v.shape());
  }
  if (shift.value().shape() != Shape{f}) {
    throw ShapeError("affine_per_feature", X.shape(), shift.shape());
  }
  const Tensor& S = scale_v.value();
  const Tensor& B = shift.value();
  Tensor out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    out[i] = X[i] * S[i % f] + B[i % f];
  }
  return tape.record(std::move(out), {x, scale_v, shift}, [x, scale_v, shift, f](Tape& t, const Tensor& g) {
    const Tensor& X = x.value();
    const Tensor& S = scale_v.value();
    Tensor* gx = t.grad_sink(x);
    Tensor* gs = t.grad_sink(scale_v);
    Tensor* gb = t.grad_sink(shift);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gx != nullptr) {
        (*gx)[i] += g[i] * S[i % f];
      }
      if (gs != nullptr) {
        (*gs)[i % f] += g[i] * X[i];
      }
      if (gb != nullptr) {
        (*gb)[i % f] += g[i];
      }
    }
  });
}

}  // namespace ratepred::nn
