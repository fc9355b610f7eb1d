#include "refcap/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace refcap {

template <typename T>
LossValue cross_entropy_loss(const Tensor<T>& dists, std::span<const TokenId> targets,
                             std::span<const std::uint8_t> mask) {
  const std::size_t rows = dists.rows(), vocab = dists.cols();
  if (targets.size() != rows || mask.size() != rows) {
    throw ShapeError("cross_entropy_loss: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(rows) + " rows");
  }
  LossValue out;
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    const TokenId id = targets[t];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("target id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(vocab));
    }
    out.sum -= std::log(static_cast<double>(dists.at(t, static_cast<std::size_t>(id))));
    ++out.tokens;
  }
  return out;
}

template LossValue cross_entropy_loss<float>(const Tensor<float>&, std::span<const TokenId>,
                                             std::span<const std::uint8_t>);
template LossValue cross_entropy_loss<double>(const Tensor<double>&, std::span<const TokenId>,
                                              std::span<const std::uint8_t>);

}  // namespace refcap
