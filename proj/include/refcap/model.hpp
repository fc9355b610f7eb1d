#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "refcap/config.hpp"
#include "refcap/decoder.hpp"
#include "refcap/features.hpp"
#include "refcap/graph.hpp"
#include "refcap/parameters.hpp"
#include "refcap/refiner.hpp"
#include "refcap/vocabulary.hpp"

namespace refcap {

/// Per-image tensors shared by every decoding step of one sequence.
template <typename T>
struct ImageContext {
  Tensor<T> regions;      // k x D, refined or raw per config
  Tensor<T> mean;         // 1 x D, mean over regions
  Tensor<T> global;       // 1 x D_g, undefined when global features are off
  Tensor<T> region_proj;  // k x D_v, undefined without visual attention
};

template <typename T>
struct DecoderState {
  LstmState<T> layer1;
  LstmState<T> layer2;
  Tensor<T> history;       // t x D_h, all layer-2 states so far
  Tensor<T> history_proj;  // t x D_f
  std::size_t steps = 0;
};

template <typename T>
struct StepOutput {
  Tensor<T> logits;     // 1 x D_o
  Tensor<T> alpha_vis;  // 1 x k, undefined without visual attention
  Tensor<T> alpha_ref;  // 1 x t, undefined without reflective attention
};

template <typename T>
struct CaptionForward {
  Tensor<T> logits;                  // (true_length - 1) x D_o
  std::vector<std::int64_t> targets;
  std::vector<Tensor<T>> alpha_vis;  // per step
  std::vector<Tensor<T>> alpha_ref;  // per step, step t has t entries
};

/// The captioning network: optional refining encoder followed by the
/// two-layer attention decoder with reflective attention, or the single-LSTM
/// baseline when two_layer_decoder is off.
template <typename T>
class CaptionModel {
 public:
  CaptionModel(ModelConfig config, std::uint64_t seed);
  CaptionModel(const CaptionModel&) = delete;
  CaptionModel& operator=(const CaptionModel&) = delete;
  CaptionModel(CaptionModel&&) = default;
  CaptionModel& operator=(CaptionModel&&) = default;

  const ModelConfig& config() const { return config_; }
  // Dropout does not affect the parameter layout, so it may change after
  // construction.
  void set_dropout(double rate) { config_.dropout = rate; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  const std::vector<RefinerLayer<T>>& refiner() const { return refiner_; }
  const Tensor<T>& embedding() const { return embed_; }
  const LstmParams<T>& lstm1() const { return lstm1_; }
  const std::optional<LstmParams<T>>& lstm2() const { return lstm2_; }
  const std::optional<AdditiveAttentionParams<T>>& visual() const { return visual_; }
  const std::optional<AdditiveAttentionParams<T>>& reflective() const {
    return reflective_;
  }
  const OutputHead<T>& head() const { return head_; }

  // Region features of a record as a k x D tensor.
  Tensor<T> region_tensor(const FeatureRecord& record) const;

  ImageContext<T> encode(Graph<T>& g, const FeatureRecord& record) const;
  DecoderState<T> initial_state() const;

  // Consumes `word`, advances `state` and scores the next word. Dropout is
  // applied when dropout_rng is non-null.
  StepOutput<T> step(Graph<T>& g, const ImageContext<T>& ctx, TokenId word,
                     DecoderState<T>& state, Rng* dropout_rng = nullptr) const;

  // Teacher-forced pass: feeds ids[0..n-2] and scores ids[1..n-1], where n is
  // the caption's true length. Throws InputError when n < 2.
  CaptionForward<T> forward_caption(Graph<T>& g, const FeatureRecord& record,
                                    const EncodedCaption& caption,
                                    Rng* dropout_rng = nullptr) const;

  // Summed negative log-likelihood of the caption's targets.
  Tensor<T> caption_loss(Graph<T>& g, const FeatureRecord& record,
                         const EncodedCaption& caption,
                         Rng* dropout_rng = nullptr) const;

 private:
  ModelConfig config_;
  ParameterSet<T> params_;
  std::vector<RefinerLayer<T>> refiner_;
  Tensor<T> embed_;  // D_o x E, row i embeds token i
  LstmParams<T> lstm1_;
  std::optional<LstmParams<T>> lstm2_;
  std::optional<AdditiveAttentionParams<T>> visual_;
  std::optional<AdditiveAttentionParams<T>> reflective_;
  OutputHead<T> head_;
};

extern template class CaptionModel<float>;
extern template class CaptionModel<double>;

}  // namespace refcap
