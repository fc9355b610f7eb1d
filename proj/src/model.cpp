#include "refcap/model.hpp"

#include <algorithm>

namespace refcap {

template <typename T>
CaptionModel<T>::CaptionModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  if (c.use_refining) {
    for (std::size_t l = 0; l < c.refine_layers; ++l) {
      refiner_.push_back(
          add_refiner_layer(params_, "refiner." + std::to_string(l), c.feature_dim));
    }
  }
  embed_ = params_.add("embed", {c.vocab_size, c.embed_dim});
  lstm1_ = add_lstm(params_, "lstm1", c.layer1_input_dim(), c.hidden_dim);
  if (c.two_layer_decoder) {
    lstm2_ = add_lstm(params_, "lstm2", c.layer2_input_dim(), c.hidden_dim);
    if (c.use_visual_attention) {
      visual_ = add_additive_attention(params_, "visual", c.feature_dim,
                                       c.hidden_dim, c.visual_att_dim);
    }
    if (c.use_reflective_attention) {
      reflective_ = add_additive_attention(params_, "reflective", c.hidden_dim,
                                           c.hidden_dim, c.reflective_att_dim);
    }
  }
  head_.w = params_.add("head.w", {c.vocab_size, c.hidden_dim});
  head_.b = params_.add("head.b", {c.vocab_size});

  Rng rng(seed);
  for (auto& [name, t] : params_.entries()) {
    if (t.rank() == 1) continue;  // biases start at zero
    xavier_uniform(t, rng);
  }
  for (auto* lstm : {&lstm1_, lstm2_ ? &*lstm2_ : nullptr}) {
    if (!lstm) continue;
    const std::size_t h = c.hidden_dim;
    std::fill_n(lstm->b.value().begin() + h, h, T(1));
  }
}

template <typename T>
Tensor<T> CaptionModel<T>::region_tensor(const FeatureRecord& record) const {
  if (record.dim != config_.feature_dim) {
    throw ShapeError("record \"" + record.image_id + "\" has feature dim " +
                     std::to_string(record.dim) + ", model expects " +
                     std::to_string(config_.feature_dim));
  }
  return Tensor<T>::from({record.regions, record.dim},
                         std::vector<T>(record.spatial.begin(), record.spatial.end()));
}

template <typename T>
ImageContext<T> CaptionModel<T>::encode(Graph<T>& g, const FeatureRecord& record) const {
  const auto& c = config_;
  ImageContext<T> ctx;
  auto raw = region_tensor(record);
  auto regions = raw;
  for (const auto& layer : refiner_) {
    regions = refine_features(g, regions, layer, c.heads,
                              static_cast<T>(c.layer_norm_eps),
                              c.aoa_projected_query)
                  .refined;
  }
  ctx.regions = c.decoder_uses_refined ? regions : raw;
  ctx.mean = g.mean_rows(ctx.regions);
  if (c.use_global_features) {
    if (record.global.size() != c.global_dim) {
      throw ShapeError("record \"" + record.image_id + "\" has global dim " +
                       std::to_string(record.global.size()) + ", model expects " +
                       std::to_string(c.global_dim));
    }
    ctx.global = Tensor<T>::from(
        {1, c.global_dim}, std::vector<T>(record.global.begin(), record.global.end()));
  }
  if (visual_) ctx.region_proj = g.linear(ctx.regions, visual_->w_key);
  return ctx;
}

template <typename T>
DecoderState<T> CaptionModel<T>::initial_state() const {
  DecoderState<T> s;
  s.layer1 = zero_lstm_state<T>(config_.hidden_dim);
  if (lstm2_) s.layer2 = zero_lstm_state<T>(config_.hidden_dim);
  return s;
}

template <typename T>
StepOutput<T> CaptionModel<T>::step(Graph<T>& g, const ImageContext<T>& ctx,
                                    TokenId word, DecoderState<T>& state,
                                    Rng* dropout_rng) const {
  const auto& c = config_;
  auto drop = [&](const Tensor<T>& x) {
    if (!dropout_rng || c.dropout == 0.0) return x;
    return g.dropout(x, static_cast<T>(c.dropout), *dropout_rng);
  };

  auto w = drop(g.embedding(embed_, static_cast<std::size_t>(word)));
  std::vector<Tensor<T>> parts;
  if (c.use_global_features) parts.push_back(ctx.global);
  parts.push_back(ctx.mean);
  parts.push_back(w);
  if (lstm2_) parts.push_back(state.layer2.h);
  state.layer1 = lstm_cell(g, g.concat(parts, 1), state.layer1, lstm1_);
  const auto& h1 = state.layer1.h;

  StepOutput<T> out;
  Tensor<T> top = h1;
  if (lstm2_) {
    Tensor<T> attended = ctx.mean;
    if (visual_) {
      auto vis = visual_attention(g, ctx.regions, ctx.region_proj, h1, *visual_);
      attended = vis.context;
      out.alpha_vis = vis.weights;
    }
    state.layer2 = lstm_cell(g, g.concat({attended, h1}, 1), state.layer2, *lstm2_);
    top = state.layer2.h;
    if (reflective_) {
      auto proj = g.linear(state.layer2.h, reflective_->w_key);
      if (state.history.defined()) {
        state.history = g.concat({state.history, state.layer2.h}, 0);
        state.history_proj = g.concat({state.history_proj, proj}, 0);
      } else {
        state.history = state.layer2.h;
        state.history_proj = proj;
      }
      const auto& query = c.reflective_query_layer1 ? h1 : state.layer2.h;
      auto ref = reflective_attention(g, state.history, state.history_proj, query,
                                      *reflective_);
      top = ref.context;
      out.alpha_ref = ref.weights;
    }
  }
  ++state.steps;
  out.logits = word_logits(g, drop(top), head_);
  return out;
}

template <typename T>
CaptionForward<T> CaptionModel<T>::forward_caption(Graph<T>& g,
                                                   const FeatureRecord& record,
                                                   const EncodedCaption& caption,
                                                   Rng* dropout_rng) const {
  const std::size_t n = caption.true_length;
  if (n < 2 || n > caption.ids.size()) {
    throw InputError("caption needs at least 2 tokens (start and end), has " +
                     std::to_string(n));
  }
  auto ctx = encode(g, record);
  auto state = initial_state();
  CaptionForward<T> out;
  std::vector<Tensor<T>> rows;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    auto s = step(g, ctx, caption.ids[t], state, dropout_rng);
    rows.push_back(s.logits);
    out.targets.push_back(caption.ids[t + 1]);
    if (s.alpha_vis.defined()) out.alpha_vis.push_back(s.alpha_vis);
    if (s.alpha_ref.defined()) out.alpha_ref.push_back(s.alpha_ref);
  }
  out.logits = rows.size() == 1 ? rows.front() : g.concat(rows, 0);
  return out;
}

template <typename T>
Tensor<T> CaptionModel<T>::caption_loss(Graph<T>& g, const FeatureRecord& record,
                                        const EncodedCaption& caption,
                                        Rng* dropout_rng) const {
  auto fwd = forward_caption(g, record, caption, dropout_rng);
  std::vector<std::uint8_t> mask(fwd.targets.size(), 1);
  return g.cross_entropy(fwd.logits, fwd.targets, mask);
}

template class CaptionModel<float>;
template class CaptionModel<double>;

}  // namespace refcap
