#include "ratepred/nn/tape.hpp"

#include <stdexcept>

namespace ratepred::nn {

const Tensor& Var::value() const {
  if (tape == nullptr) {
    throw std::logic_error("Var: not attached to a tape");
  }
  return tape->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.set_requires_grad(false);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.set_requires_grad(true);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::param(ParamStore& store, const std::string& path) {
  const auto key = std::make_pair(static_cast<const ParamStore*>(&store), path);
  if (auto it = param_ids_.find(key); it != param_ids_.end()) {
    return Var{this, it->second};
  }
  auto& entry = store.entry(path);
  Node n;
  n.value = entry.value;
  n.needs_grad = true;
  n.param = &entry;
  Var v = push(std::move(n));
  param_ids_.emplace(key, v.id);
  return v;
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (Var p : parents) {
    if (p.tape != this) {
      throw std::invalid_argument("Tape::record: operand belongs to a different tape");
    }
    n.needs_grad = n.needs_grad || nodes_.at(p.id).needs_grad;
  }
  if (n.needs_grad) {
    n.backward = std::move(fn);
  }
  return push(std::move(n));
}

Tensor* Tape::grad_sink(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.needs_grad) {
    return nullptr;
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) {
    throw std::invalid_argument("backward: loss belongs to a different tape");
  }
  if (value(loss).size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     to_string(value(loss).shape()));
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad) {
      n.grad = Tensor(n.value.shape());
    }
  }
  if (nodes_[loss.id].needs_grad) {
    nodes_[loss.id].grad[0] = 1.0;
  }
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward) {
      n.backward(*this, n.grad);
    }
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr) {
      continue;
    }
    auto& g = n.param->grad;
    if (n.grad.size() == g.size()) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] += n.grad[k];
      }
    }
    n.param->grad_ready = true;
  }
  has_grads_ = true;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!has_grads_ || !n.needs_grad) {
    throw std::logic_error("Tape::grad: no gradient recorded for this node");
  }
  return n.grad;
}

}  // namespace ratepred::nn
