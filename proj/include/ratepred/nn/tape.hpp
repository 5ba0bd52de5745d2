#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>

#include "ratepred/nn/tensor.hpp"

namespace ratepred::nn {

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid as long as the
/// tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Define-by-run reverse-mode tape. Build one per forward pass, call
/// backward() on the scalar loss, then drop it.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is readable through grad() after backward.
  Var variable(Tensor value);
  /// Leaf bound to a ParamStore entry; backward() accumulates into its grad.
  /// Repeated calls with the same path return the same node.
  Var param(ParamStore& store, const std::string& path);

  /// Records an operation result. `fn` is only invoked if some parent needs a
  /// gradient.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn fn);
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(fn));
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  /// Gradient accumulator of `v` during backward; nullptr when `v` takes no
  /// gradient.
  Tensor* grad_sink(Var v);

  /// Reverse sweep from a single-element loss. Parameter gradients are added
  /// to the ParamStore, so two calls without zero_grad() sum.
  void backward(Var loss);

  /// Gradient of a variable() or param() leaf from the last backward().
  const Tensor& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    BackwardFn backward;
    ParamStore::Entry* param = nullptr;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::map<std::pair<const ParamStore*, std::string>, std::size_t> param_ids_;
  bool has_grads_ = false;
};

}  // namespace ratepred::nn
