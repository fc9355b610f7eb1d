#include "refcap/refiner.hpp"

#include <cmath>

namespace refcap {

template <typename T>
RefinerLayer<T> add_refiner_layer(ParameterSet<T>& params,
                                  const std::string& prefix, std::size_t dim) {
  RefinerLayer<T> l;
  l.w_q = params.add(prefix + ".w_q", {dim, dim});
  l.w_k = params.add(prefix + ".w_k", {dim, dim});
  l.w_v = params.add(prefix + ".w_v", {dim, dim});
  l.w_info_q = params.add(prefix + ".w_info_q", {dim, dim});
  l.w_info_v = params.add(prefix + ".w_info_v", {dim, dim});
  l.b_info = params.add(prefix + ".b_info", {dim});
  l.w_gate_q = params.add(prefix + ".w_gate_q", {dim, dim});
  l.w_gate_v = params.add(prefix + ".w_gate_v", {dim, dim});
  l.b_gate = params.add(prefix + ".b_gate", {dim});
  return l;
}

template <typename T>
MultiHeadResult<T> multi_head_attention(Graph<T>& g, const Tensor<T>& q,
                                        const Tensor<T>& k, const Tensor<T>& v,
                                        std::size_t heads) {
  const std::size_t dim = q.cols();
  if (k.cols() != dim || v.cols() != dim || k.rows() != v.rows()) {
    throw ShapeError("multi_head_attention: incompatible Q " +
                     shape_to_string(q.shape()) + ", K " +
                     shape_to_string(k.shape()) + ", V " +
                     shape_to_string(v.shape()));
  }
  if (heads == 0 || dim % heads != 0) {
    throw ShapeError("multi_head_attention: width " + std::to_string(dim) +
                     " is not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t d = dim / heads;
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
  MultiHeadResult<T> r;
  std::vector<Tensor<T>> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    auto qh = g.slice_cols(q, h * d, d);
    auto kh = g.slice_cols(k, h * d, d);
    auto vh = g.slice_cols(v, h * d, d);
    auto scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_sqrt_d);
    auto w = g.softmax(scores);
    outs.push_back(g.matmul(w, vh));
    r.weights.push_back(w);
  }
  r.output = heads == 1 ? outs.front() : g.concat(outs, 1);
  return r;
}

template <typename T>
GatedResult<T> attention_on_attention(Graph<T>& g, const Tensor<T>& attended,
                                      const Tensor<T>& query,
                                      const RefinerLayer<T>& layer) {
  GatedResult<T> r;
  r.info = g.add(g.linear(query, layer.w_info_q),
                 g.linear(attended, layer.w_info_v, layer.b_info));
  r.gate = g.sigmoid(g.add(g.linear(query, layer.w_gate_q),
                           g.linear(attended, layer.w_gate_v, layer.b_gate)));
  r.output = g.hadamard(r.gate, r.info);
  return r;
}

template <typename T>
RefineResult<T> refine_features(Graph<T>& g, const Tensor<T>& features,
                                const RefinerLayer<T>& layer, std::size_t heads,
                                T eps, bool projected_query) {
  auto q = g.linear(features, layer.w_q);
  auto k = g.linear(features, layer.w_k);
  auto v = g.linear(features, layer.w_v);
  auto mha = multi_head_attention(g, q, k, v, heads);
  auto aoa = attention_on_attention(g, mha.output, projected_query ? q : features,
                                    layer);
  RefineResult<T> r;
  r.refined = g.layer_norm(g.add(features, aoa.output), eps);
  r.weights = std::move(mha.weights);
  r.gate = aoa.gate;
  return r;
}

#define REFCAP_INSTANTIATE_REFINER(T)                                          \
  template RefinerLayer<T> add_refiner_layer<T>(ParameterSet<T>&,              \
                                                const std::string&, std::size_t); \
  template MultiHeadResult<T> multi_head_attention<T>(                         \
      Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
      std::size_t);                                                            \
  template GatedResult<T> attention_on_attention<T>(                           \
      Graph<T>&, const Tensor<T>&, const Tensor<T>&, const RefinerLayer<T>&);  \
  template RefineResult<T> refine_features<T>(Graph<T>&, const Tensor<T>&,     \
                                              const RefinerLayer<T>&,          \
                                              std::size_t, T, bool);

REFCAP_INSTANTIATE_REFINER(float)
REFCAP_INSTANTIATE_REFINER(double)

#undef REFCAP_INSTANTIATE_REFINER

}  // namespace refcap
