#include "refcap/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refcap {

template <typename T>
Tensor<T>& ParameterSet<T>::add(const std::string& name, Shape shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  entries_.emplace_back(name, Tensor::zeros(std::move(shape), true));
  return entries_.back().second;
}

template <typename T>
bool ParameterSet<T>::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

template <typename T>
const Tensor<T>& ParameterSet<T>::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw std::out_of_range("unknown parameter " + name);
}

template <typename T>
Tensor<T>& ParameterSet<T>::get(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

template <typename T>
std::vector<std::string> ParameterSet<T>::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

template <typename T>
void xavier_uniform(Tensor<T>& t, Rng& rng) {
  const double fan_out = static_cast<double>(t.rows());
  const double fan_in = static_cast<double>(t.cols());
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> uni(-a, a);
  for (auto& v : t.value()) v = static_cast<T>(uni(rng));
}

template <typename T>
void fill(Tensor<T>& t, T value) {
  std::fill(t.value().begin(), t.value().end(), value);
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template void xavier_uniform<float>(Tensor<float>&, Rng&);
template void xavier_uniform<double>(Tensor<double>&, Rng&);
template void fill<float>(Tensor<float>&, float);
template void fill<double>(Tensor<double>&, double);

}  // namespace refcap
