#include "refcap/decoder.hpp"

#include <stdexcept>

namespace refcap {

template <typename T>
LstmParams<T> add_lstm(ParameterSet<T>& params, const std::string& prefix,
                       std::size_t input_dim, std::size_t hidden_dim) {
  LstmParams<T> p;
  p.w_x = params.add(prefix + ".w_x", {4 * hidden_dim, input_dim});
  p.w_h = params.add(prefix + ".w_h", {4 * hidden_dim, hidden_dim});
  p.b = params.add(prefix + ".b", {4 * hidden_dim});
  return p;
}

template <typename T>
LstmState<T> zero_lstm_state(std::size_t hidden_dim) {
  return {Tensor<T>::zeros({1, hidden_dim}), Tensor<T>::zeros({1, hidden_dim})};
}

template <typename T>
LstmState<T> lstm_cell(Graph<T>& g, const Tensor<T>& x,
                       const LstmState<T>& state, const LstmParams<T>& p) {
  const std::size_t h = p.hidden();
  if (x.rows() != 1 || x.cols() != p.w_x.cols()) {
    throw ShapeError("lstm_cell: input " + shape_to_string(x.shape()) +
                     " does not match weight " + shape_to_string(p.w_x.shape()));
  }
  if (state.h.size() != h || state.c.size() != h) {
    throw ShapeError("lstm_cell: state width differs from hidden size " +
                     std::to_string(h));
  }
  auto pre = g.add(g.linear(x, p.w_x, p.b), g.linear(state.h, p.w_h));
  auto i = g.sigmoid(g.slice_cols(pre, 0, h));
  auto f = g.sigmoid(g.slice_cols(pre, h, h));
  auto cand = g.tanh(g.slice_cols(pre, 2 * h, h));
  auto o = g.sigmoid(g.slice_cols(pre, 3 * h, h));
  LstmState<T> next;
  next.c = g.add(g.hadamard(f, state.c), g.hadamard(i, cand));
  next.h = g.hadamard(o, g.tanh(next.c));
  return next;
}

template <typename T>
AdditiveAttentionParams<T> add_additive_attention(ParameterSet<T>& params,
                                                  const std::string& prefix,
                                                  std::size_t key_dim,
                                                  std::size_t query_dim,
                                                  std::size_t att_dim) {
  AdditiveAttentionParams<T> p;
  p.w_key = params.add(prefix + ".w_key", {att_dim, key_dim});
  p.w_query = params.add(prefix + ".w_query", {att_dim, query_dim});
  p.w_score = params.add(prefix + ".w_score", {1, att_dim});
  return p;
}

template <typename T>
AttentionOutput<T> additive_attention(Graph<T>& g, const Tensor<T>& keys,
                                      const Tensor<T>& key_proj,
                                      const Tensor<T>& query,
                                      const AdditiveAttentionParams<T>& p) {
  if (key_proj.rows() != keys.rows()) {
    throw ShapeError("additive_attention: projection has " +
                     std::to_string(key_proj.rows()) + " rows for " +
                     std::to_string(keys.rows()) + " keys");
  }
  auto hidden = g.tanh(g.add_row(key_proj, g.linear(query, p.w_query)));
  auto scores = g.transpose(g.linear(hidden, p.w_score));  // 1 x n
  AttentionOutput<T> out;
  out.weights = g.softmax(scores);
  out.context = g.matmul(out.weights, keys);
  return out;
}

template <typename T>
AttentionOutput<T> reflective_attention(Graph<T>& g, const Tensor<T>& history,
                                        const Tensor<T>& history_proj,
                                        const Tensor<T>& query,
                                        const AdditiveAttentionParams<T>& p) {
  if (!history.defined()) {
    throw std::invalid_argument("reflective_attention: empty history");
  }
  return additive_attention(g, history, history_proj, query, p);
}

template <typename T>
Tensor<T> word_logits(Graph<T>& g, const Tensor<T>& hidden, const OutputHead<T>& head) {
  return g.linear(hidden, head.w, head.b);
}

template <typename T>
Tensor<T> predict_word(Graph<T>& g, const Tensor<T>& hidden, const OutputHead<T>& head) {
  return g.softmax(word_logits(g, hidden, head));
}

#define REFCAP_INSTANTIATE_DECODER(T)                                          \
  template LstmParams<T> add_lstm<T>(ParameterSet<T>&, const std::string&,     \
                                     std::size_t, std::size_t);                \
  template LstmState<T> zero_lstm_state<T>(std::size_t);                       \
  template LstmState<T> lstm_cell<T>(Graph<T>&, const Tensor<T>&,              \
                                     const LstmState<T>&, const LstmParams<T>&); \
  template AdditiveAttentionParams<T> add_additive_attention<T>(               \
      ParameterSet<T>&, const std::string&, std::size_t, std::size_t,          \
      std::size_t);                                                            \
  template AttentionOutput<T> additive_attention<T>(                           \
      Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
      const AdditiveAttentionParams<T>&);                                      \
  template AttentionOutput<T> reflective_attention<T>(                         \
      Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
      const AdditiveAttentionParams<T>&);                                      \
  template Tensor<T> word_logits<T>(Graph<T>&, const Tensor<T>&,               \
                                    const OutputHead<T>&);                     \
  template Tensor<T> predict_word<T>(Graph<T>&, const Tensor<T>&,              \
                                     const OutputHead<T>&);

REFCAP_INSTANTIATE_DECODER(float)
REFCAP_INSTANTIATE_DECODER(double)

#undef REFCAP_INSTANTIATE_DECODER

}  // namespace refcap
