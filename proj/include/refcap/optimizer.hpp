#pragma once

#include <vector>

#include "refcap/parameters.hpp"

namespace refcap {

struct AdamaxOptions {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adamax (infinity-norm Adam):
///   m <- b1 m + (1 - b1) g
///   u <- max(b2 u, |g|)
///   theta <- theta - lr / (1 - b1^t) * m / (u + eps)
template <typename T>
class Adamax {
 public:
  Adamax(ParameterSet<T>& params, AdamaxOptions options = {});

  // Applies one update from the accumulated gradients.
  void step();
  std::size_t steps() const { return t_; }
  const AdamaxOptions& options() const { return opts_; }

 private:
  ParameterSet<T>& params_;
  AdamaxOptions opts_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> u_;
  std::size_t t_ = 0;
};

/// Adds decay * theta to every gradient.
template <typename T>
void apply_weight_decay(ParameterSet<T>& params, double decay);

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterSet<T>& params, double max_norm);

extern template class Adamax<float>;
extern template class Adamax<double>;

}  // namespace refcap
