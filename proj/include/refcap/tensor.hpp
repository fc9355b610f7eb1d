#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "refcap/errors.hpp"

namespace refcap {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Storage shared between Tensor handles. The gradient buffer is allocated
// lazily, the first time a backward rule touches it.
template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
};

/// Dense row-major array with an optional accumulated gradient.
///
/// Tensors are reference handles: copying a Tensor aliases the same storage.
/// All model math treats a tensor as a matrix; a rank-1 tensor of extent n
/// behaves as a single row (1 x n).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values,
                     bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }

  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t size() const { return storage_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<T> value() { return storage_->value; }
  std::span<const T> value() const { return storage_->value; }
  T& operator[](std::size_t i) { return storage_->value[i]; }
  const T& operator[](std::size_t i) const { return storage_->value[i]; }
  T& at(std::size_t r, std::size_t c) { return storage_->value[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return storage_->value[r * cols() + c];
  }
  T item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool on) { storage_->requires_grad = on; }

  bool has_grad() const { return !storage_->grad.empty(); }
  // Returns the gradient buffer, allocating zeros on first use. A const
  // handle still shares its storage, so backward rules may write through it.
  std::span<T> grad() const;
  void zero_grad();
  void release_grad() { std::vector<T>().swap(storage_->grad); }

  // Deep copy of values (no gradient, no graph history).
  Tensor clone() const;
  std::vector<T> to_vector() const { return storage_->value; }

  bool same_storage(const Tensor& other) const {
    return storage_ == other.storage_;
  }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage<T>> storage)
      : storage_(std::move(storage)) {}

  std::shared_ptr<TensorStorage<T>> storage_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace refcap
