#pragma once

#include <string>

#include "refcap/graph.hpp"
#include "refcap/parameters.hpp"

namespace refcap {

/// Standard LSTM cell. Gate rows of w_x, w_h and b are ordered
/// input, forget, candidate, output (each hidden_dim wide).
template <typename T>
struct LstmParams {
  Tensor<T> w_x;  // 4H x input
  Tensor<T> w_h;  // 4H x H
  Tensor<T> b;    // 4H
  std::size_t hidden() const { return w_h.cols(); }
};

template <typename T>
struct LstmState {
  Tensor<T> h;  // 1 x H
  Tensor<T> c;  // 1 x H
};

template <typename T>
LstmParams<T> add_lstm(ParameterSet<T>& params, const std::string& prefix,
                       std::size_t input_dim, std::size_t hidden_dim);

template <typename T>
LstmState<T> zero_lstm_state(std::size_t hidden_dim);

template <typename T>
LstmState<T> lstm_cell(Graph<T>& g, const Tensor<T>& x,
                       const LstmState<T>& state, const LstmParams<T>& p);

/// Additive attention score  w_score . tanh(W_key key_i + W_query query).
template <typename T>
struct AdditiveAttentionParams {
  Tensor<T> w_key;    // A x key_dim
  Tensor<T> w_query;  // A x query_dim
  Tensor<T> w_score;  // 1 x A
};

template <typename T>
AdditiveAttentionParams<T> add_additive_attention(ParameterSet<T>& params,
                                                  const std::string& prefix,
                                                  std::size_t key_dim,
                                                  std::size_t query_dim,
                                                  std::size_t att_dim);

template <typename T>
struct AttentionOutput {
  Tensor<T> context;  // 1 x key_dim, weighted sum of keys
  Tensor<T> weights;  // 1 x n, a probability distribution
};

/// Attends over the rows of keys (n x key_dim). key_proj is keys * W_key^T,
/// precomputed once per sequence because the keys do not change per step.
template <typename T>
AttentionOutput<T> additive_attention(Graph<T>& g, const Tensor<T>& keys,
                                      const Tensor<T>& key_proj,
                                      const Tensor<T>& query,
                                      const AdditiveAttentionParams<T>& p);

/// Top-down attention over the k image regions, queried by h1_t.
template <typename T>
AttentionOutput<T> visual_attention(Graph<T>& g, const Tensor<T>& regions,
                                    const Tensor<T>& region_proj,
                                    const Tensor<T>& h1,
                                    const AdditiveAttentionParams<T>& p) {
  return additive_attention(g, regions, region_proj, h1, p);
}

/// Attention over the layer-2 hidden-state history h2_1..h2_t. Throws
/// std::invalid_argument on an empty history.
template <typename T>
AttentionOutput<T> reflective_attention(Graph<T>& g, const Tensor<T>& history,
                                        const Tensor<T>& history_proj,
                                        const Tensor<T>& query,
                                        const AdditiveAttentionParams<T>& p);

template <typename T>
struct OutputHead {
  Tensor<T> w;  // D_o x D_h
  Tensor<T> b;  // D_o
};

/// Unnormalized word scores W_s h + b_s.
template <typename T>
Tensor<T> word_logits(Graph<T>& g, const Tensor<T>& hidden, const OutputHead<T>& head);

/// Softmax(W_s h + b_s) over the vocabulary.
template <typename T>
Tensor<T> predict_word(Graph<T>& g, const Tensor<T>& hidden, const OutputHead<T>& head);

}  // namespace refcap
