#include "refcap/config.hpp"

#include "refcap/errors.hpp"

namespace refcap {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kVisAtt: return "visatt";
    case Variant::kVisAttRefAtt: return "visattrefatt";
    case Variant::kRefining: return "refining";
  }
  return "refining";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kBaseline, Variant::kVisAtt, Variant::kVisAttRefAtt,
                 Variant::kRefining}) {
    if (variant_name(v) == name) return v;
  }
  throw InputError("unknown variant \"" + std::string(name) +
                   "\" (expected baseline|visatt|visattrefatt|refining)");
}

void ModelConfig::apply_variant(Variant v) {
  use_refining = v == Variant::kRefining;
  use_global_features = v == Variant::kRefining;
  use_reflective_attention = v == Variant::kRefining || v == Variant::kVisAttRefAtt;
  use_visual_attention = v != Variant::kBaseline;
  two_layer_decoder = v != Variant::kBaseline;
}

ModelConfig config_for_variant(Variant v) {
  ModelConfig c;
  c.apply_variant(v);
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw InputError(std::string(name) + " must be positive");
  };
  positive(feature_dim, "feature_dim");
  positive(vocab_size, "vocab_size");
  positive(embed_dim, "embed_dim");
  positive(hidden_dim, "hidden_dim");
  positive(visual_att_dim, "visual_att_dim");
  positive(reflective_att_dim, "reflective_att_dim");
  positive(heads, "heads");
  if (use_global_features) positive(global_dim, "global_dim");
  if (use_refining && feature_dim % heads != 0) {
    throw InputError("feature_dim " + std::to_string(feature_dim) +
                     " is not divisible by heads " + std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw InputError("dropout must lie in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) throw InputError("layer_norm_eps must be > 0");
}

std::size_t ModelConfig::layer1_input_dim() const {
  std::size_t n = feature_dim + embed_dim;
  if (use_global_features) n += global_dim;
  if (two_layer_decoder) n += hidden_dim;
  return n;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"feature_dim", feature_dim},
          {"global_dim", global_dim},
          {"vocab_size", vocab_size},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"visual_att_dim", visual_att_dim},
          {"reflective_att_dim", reflective_att_dim},
          {"heads", heads},
          {"refine_layers", refine_layers},
          {"use_refining", use_refining},
          {"use_visual_attention", use_visual_attention},
          {"use_reflective_attention", use_reflective_attention},
          {"use_global_features", use_global_features},
          {"two_layer_decoder", two_layer_decoder},
          {"aoa_projected_query", aoa_projected_query},
          {"decoder_uses_refined", decoder_uses_refined},
          {"reflective_query_layer1", reflective_query_layer1},
          {"layer_norm_eps", layer_norm_eps},
          {"dropout", dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.feature_dim = j.at("feature_dim");
    c.global_dim = j.at("global_dim");
    c.vocab_size = j.at("vocab_size");
    c.embed_dim = j.at("embed_dim");
    c.hidden_dim = j.at("hidden_dim");
    c.visual_att_dim = j.at("visual_att_dim");
    c.reflective_att_dim = j.at("reflective_att_dim");
    c.heads = j.at("heads");
    c.refine_layers = j.at("refine_layers");
    c.use_refining = j.at("use_refining");
    c.use_visual_attention = j.at("use_visual_attention");
    c.use_reflective_attention = j.at("use_reflective_attention");
    c.use_global_features = j.at("use_global_features");
    c.two_layer_decoder = j.at("two_layer_decoder");
    c.aoa_projected_query = j.at("aoa_projected_query");
    c.decoder_uses_refined = j.at("decoder_uses_refined");
    c.reflective_query_layer1 = j.at("reflective_query_layer1");
    c.layer_norm_eps = j.at("layer_norm_eps");
    c.dropout = j.at("dropout");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model config: ") + e.what());
  }
  return c;
}

}  // namespace refcap
