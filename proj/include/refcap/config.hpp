#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "json.hpp"

namespace refcap {

/// Architecture ablations, from a single-LSTM baseline up to the full
/// refining + visual attention + reflective attention model.
enum class Variant { kBaseline, kVisAtt, kVisAttRefAtt, kRefining };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);  // throws InputError

struct ModelConfig {
  std::size_t feature_dim = 2048;   // D
  std::size_t global_dim = 2048;    // D_g
  std::size_t vocab_size = 0;       // D_o
  std::size_t embed_dim = 1000;     // E
  std::size_t hidden_dim = 1000;    // D_h
  std::size_t visual_att_dim = 512;      // D_v
  std::size_t reflective_att_dim = 512;  // D_f
  std::size_t heads = 8;                 // H
  std::size_t refine_layers = 1;

  bool use_refining = true;
  bool use_visual_attention = true;
  bool use_reflective_attention = true;
  bool use_global_features = true;
  // false selects the baseline decoder: one LSTM over [context, word].
  bool two_layer_decoder = true;

  // AoA consumes the projected query W_Q A rather than raw A.
  bool aoa_projected_query = true;
  // Decoder attends over refined features (raw features when false).
  bool decoder_uses_refined = true;
  // Reflective attention is queried with the layer-1 state (layer-2 when false).
  bool reflective_query_layer1 = true;

  double layer_norm_eps = 1e-5;
  double dropout = 0.5;

  void apply_variant(Variant v);
  // Throws InputError on inconsistent dimensions.
  void validate() const;

  std::size_t layer1_input_dim() const;
  std::size_t layer2_input_dim() const { return feature_dim + hidden_dim; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

ModelConfig config_for_variant(Variant v);

}  // namespace refcap
