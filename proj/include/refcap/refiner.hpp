#pragma once

#include <string>
#include <vector>

#include "refcap/graph.hpp"
#include "refcap/parameters.hpp"

namespace refcap {

/// Weights of one refining layer. Matrices are stored output x input.
template <typename T>
struct RefinerLayer {
  Tensor<T> w_q, w_k, w_v;     // D x D projections of the region features
  Tensor<T> w_info_q, w_info_v, b_info;  // information vector I
  Tensor<T> w_gate_q, w_gate_v, b_gate;  // attention gate G
};

template <typename T>
RefinerLayer<T> add_refiner_layer(ParameterSet<T>& params,
                                  const std::string& prefix, std::size_t dim);

template <typename T>
struct MultiHeadResult {
  Tensor<T> output;                 // k x D, heads concatenated on channels
  std::vector<Tensor<T>> weights;   // per head, k x k, rows sum to 1
};

/// Scaled dot-product attention on H channel slices of width D/H.
/// Throws ShapeError when D is not divisible by H.
template <typename T>
MultiHeadResult<T> multi_head_attention(Graph<T>& g, const Tensor<T>& q,
                                        const Tensor<T>& k, const Tensor<T>& v,
                                        std::size_t heads);

template <typename T>
struct GatedResult {
  Tensor<T> output;  // G (.) I
  Tensor<T> info;    // I
  Tensor<T> gate;    // G, every element in (0, 1)
};

/// Attention-on-attention: I = W_iq q + W_iv v_att + b_i,
/// G = sigmoid(W_gq q + W_gv v_att + b_g), output = G (.) I.
template <typename T>
GatedResult<T> attention_on_attention(Graph<T>& g, const Tensor<T>& attended,
                                      const Tensor<T>& query,
                                      const RefinerLayer<T>& layer);

template <typename T>
struct RefineResult {
  Tensor<T> refined;  // same shape as the input
  std::vector<Tensor<T>> weights;
  Tensor<T> gate;
};

/// LayerNorm(A + AoA(MHA(W_Q A, W_K A, W_V A), query)), where the AoA query
/// is W_Q A (or raw A when projected_query is false).
template <typename T>
RefineResult<T> refine_features(Graph<T>& g, const Tensor<T>& features,
                                const RefinerLayer<T>& layer, std::size_t heads,
                                T eps, bool projected_query = true);

}  // namespace refcap
