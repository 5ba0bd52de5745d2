#include "ratepred/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ratepred::nn {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      out += ", ";
    }
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

ShapeError::ShapeError(std::string_view kind, const Shape& a, const Shape& b)
    : std::invalid_argument(std::string(kind) + ": incompatible shapes " + to_string(a) +
                            " and " + to_string(b)) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {
  for (std::size_t d : shape_) {
    if (d == 0) {
      throw ShapeError("tensor: zero-length dimension in " + to_string(shape_));
    }
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (numel(shape_) != data_.size()) {
    throw ShapeError("tensor: shape " + to_string(shape_) + " needs " +
                     std::to_string(numel(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item: expected a single element, shape is " + to_string(shape_));
  }
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& ParamStore::add(const std::string& path, Tensor init) {
  if (entries_.contains(path)) {
    throw std::invalid_argument("ParamStore: duplicate parameter path '" + path + "'");
  }
  Entry e;
  e.grad = Tensor(init.shape());
  e.value = std::move(init);
  e.value.set_requires_grad(true);
  return entries_.emplace(path, std::move(e)).first->second.value;
}

ParamStore::Entry& ParamStore::entry(const std::string& path) {
  auto it = entries_.find(path);
  if (it == entries_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter '" + path + "'");
  }
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& path) const {
  auto it = entries_.find(path);
  if (it == entries_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter '" + path + "'");
  }
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [path, e] : entries_) {
    e.grad.fill(0.0);
    e.grad_ready = true;
  }
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [path, e] : entries_) {
    n += e.value.size();
  }
  return n;
}

}  // namespace ratepred::nn
