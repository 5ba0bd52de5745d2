#pragma once

#include <cstddef>
#include <map>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ratepred::nn {

using Shape = std::vector<std::size_t>;

/// 64-byte aligned storage. Vectorized reductions peel leading elements based
/// on the address, so unaligned buffers can change results in the last bit.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised by any operation whose operand shapes are incompatible.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(std::string_view kind, const Shape& a, const Shape& b);
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag) { requires_grad_ = flag; }

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Buffer data_;
  bool requires_grad_ = false;
};

/// Named learnable parameters with gradients of identical shape. Paths are
/// kept sorted so iteration order is deterministic.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
    /// False until a backward pass or zero_grad() has written `grad`.
    bool grad_ready = false;
  };

  Tensor& add(const std::string& path, Tensor init);

  bool contains(const std::string& path) const { return entries_.contains(path); }
  Entry& entry(const std::string& path);
  const Entry& entry(const std::string& path) const;
  Tensor& value(const std::string& path) { return entry(path).value; }
  const Tensor& value(const std::string& path) const { return entry(path).value; }
  const Tensor& grad(const std::string& path) const { return entry(path).grad; }

  void zero_grad();
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace ratepred::nn
