#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "refcap/tensor.hpp"

namespace refcap {

using Rng = std::mt19937_64;

/// Records the primitive operations of one forward pass and replays their
/// adjoints in reverse.
///
/// Every primitive treats its operands as row-major matrices (rank-1 tensors
/// are single rows). An operation is taped only when the graph is recording
/// and at least one operand requires a gradient; otherwise the result is a
/// plain value. A graph is confined to one thread. backward() consumes the
/// tape, so each graph supports exactly one backward pass; parameter
/// gradients accumulate across graphs until zeroed.
template <typename T>
class Graph {
 public:
  using Tensor = refcap::Tensor<T>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t recorded_ops() const { return ops_.size(); }

  // Linear algebra.
  Tensor matmul(const Tensor& a, const Tensor& b);
  // x * W^T + bias; bias (optional) has W.rows() elements and is broadcast
  // over the rows of x.
  Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});
  Tensor transpose(const Tensor& a);

  // Elementwise.
  Tensor add(const Tensor& a, const Tensor& b);
  // Adds the single row `row` (1 x n) to every row of a (m x n).
  Tensor add_row(const Tensor& a, const Tensor& row);
  Tensor hadamard(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, T factor);
  Tensor sigmoid(const Tensor& a);
  Tensor tanh(const Tensor& a);

  // Row-wise softmax with max subtraction.
  Tensor softmax(const Tensor& a);
  // Row-wise normalization to zero mean and unit variance.
  Tensor layer_norm(const Tensor& a, T eps);

  // Structure.
  Tensor concat(std::span<const Tensor> parts, int axis);
  Tensor concat(std::initializer_list<Tensor> parts, int axis) {
    std::vector<Tensor> v(parts);
    return concat(std::span<const Tensor>(v), axis);
  }
  Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
  Tensor embedding(const Tensor& table, std::size_t id);

  // Reductions.
  Tensor mean_rows(const Tensor& a);
  Tensor sum(const Tensor& a);

  // Inverted dropout: kept activations are divided by (1 - rate). A rate of
  // zero returns the operand unchanged.
  Tensor dropout(const Tensor& a, T rate, Rng& rng);

  // Summed negative log-likelihood of targets under row-wise softmax of
  // logits. Rows whose mask entry is zero are skipped.
  Tensor cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets,
                       std::span<const std::uint8_t> mask);

  // Seeds d(loss)/d(loss) = 1 and replays the tape. loss must be a scalar.
  void backward(const Tensor& loss);

 private:
  bool needs_grad(std::initializer_list<const Tensor*> inputs) const;
  Tensor make(Shape shape, bool grad);
  void push(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

  bool record_;
  std::vector<std::function<void()>> ops_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace refcap
