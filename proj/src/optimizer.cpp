#include "refcap/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace refcap {

template <typename T>
Adamax<T>::Adamax(ParameterSet<T>& params, AdamaxOptions options)
    : params_(params), opts_(options) {
  for (const auto& [name, t] : params_.entries()) {
    m_.emplace_back(t.size(), 0.0);
    u_.emplace_back(t.size(), 0.0);
  }
}

template <typename T>
void Adamax<T>::step() {
  ++t_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double step_size =
      opts_.learning_rate / (1.0 - std::pow(b1, static_cast<double>(t_)));
  auto& entries = params_.entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto& theta = entries[p].second;
    auto& m = m_[p];
    auto& u = u_[p];
    auto value = theta.value();
    const bool has_grad = theta.has_grad();
    auto grad = std::as_const(theta).grad();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = has_grad ? static_cast<double>(grad[i]) : 0.0;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      u[i] = std::max(b2 * u[i], std::abs(g));
      if (m[i] == 0.0) continue;
      value[i] -= static_cast<T>(step_size * m[i] / (u[i] + opts_.eps));
    }
  }
}

template <typename T>
void apply_weight_decay(ParameterSet<T>& params, double decay) {
  if (decay == 0.0) return;
  for (auto& [name, t] : params.entries()) {
    auto g = t.grad();
    auto v = t.value();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(decay) * v[i];
  }
}

template <typename T>
double clip_grad_norm(ParameterSet<T>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : params.entries()) {
    for (T g : t.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& [name, t] : params.entries()) {
      for (T& g : t.grad()) g *= scale;
    }
  }
  return norm;
}

template class Adamax<float>;
template class Adamax<double>;
template void apply_weight_decay<float>(ParameterSet<float>&, double);
template void apply_weight_decay<double>(ParameterSet<double>&, double);
template double clip_grad_norm<float>(ParameterSet<float>&, double);
template double clip_grad_norm<double>(ParameterSet<double>&, double);

}  // namespace refcap
