#pragma once

#include <string>
#include <utility>
#include <vector>

#include "refcap/graph.hpp"
#include "refcap/tensor.hpp"

namespace refcap {

/// Named trainable tensors in insertion order.
template <typename T>
class ParameterSet {
 public:
  using Tensor = refcap::Tensor<T>;

  Tensor& add(const std::string& name, Shape shape);
  bool contains(const std::string& name) const;
  // Throws std::out_of_range for an unknown name.
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void xavier_uniform(Tensor<T>& t, Rng& rng);

template <typename T>
void fill(Tensor<T>& t, T value);

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace refcap
