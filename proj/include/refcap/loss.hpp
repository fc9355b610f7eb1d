#pragma once

#include <cstdint>
#include <span>

#include "refcap/tensor.hpp"
#include "refcap/vocabulary.hpp"

namespace refcap {

struct LossValue {
  double sum = 0.0;        // -sum over unmasked rows of log p(target)
  std::size_t tokens = 0;  // unmasked rows
  double per_token() const { return tokens ? sum / static_cast<double>(tokens) : 0.0; }
};

/// Negative log-likelihood of targets under already-normalized distributions
/// (one row per step). Rows with mask 0 are skipped. Throws std::out_of_range
/// for a target outside the vocabulary.
template <typename T>
LossValue cross_entropy_loss(const Tensor<T>& dists, std::span<const TokenId> targets,
                             std::span<const std::uint8_t> mask);

}  // namespace refcap
