#include "refcap/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace refcap {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  for (auto e : shape) {
    if (e == 0) throw ShapeError("zero extent in shape " + shape_to_string(shape));
  }
  auto s = std::make_shared<TensorStorage<T>>();
  s->value.assign(shape_size(shape), T(0));
  s->shape = std::move(shape);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values,
                          bool requires_grad) {
  if (shape_size(shape) != values.size() || values.empty()) {
    throw ShapeError("shape " + shape_to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto s = std::make_shared<TensorStorage<T>>();
  s->shape = std::move(shape);
  s->value = std::move(values);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  const auto& s = storage_->shape;
  if (s.size() <= 1) return 1;
  return shape_size(Shape(s.begin(), s.end() - 1));
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  const auto& s = storage_->shape;
  return s.empty() ? 1 : s.back();
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) {
    throw ShapeError("item() on non-scalar tensor " + shape_to_string(shape()));
  }
  return storage_->value[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->value.size(), T(0));
  return storage_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(storage_->grad.begin(), storage_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from(shape(), storage_->value, false);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace refcap
