#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "refcap/config.hpp"
#include "refcap/model.hpp"
#include "refcap/vocabulary.hpp"

namespace refcap {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// Everything needed to rebuild a trained model for inference.
struct Checkpoint {
  ModelConfig model;
  nlohmann::json train = nlohmann::json::object();  // training settings
  std::vector<std::string> vocab_tokens;
  int vocab_min_count = kDefaultMinCount;
  std::uint64_t vocab_fingerprint = 0;
  int max_len = kDefaultMaxLen;
  int epoch = 0;
  double best_bleu = 0.0;
  std::vector<NamedTensor> tensors;

  Vocabulary vocabulary() const;
};

template <typename T>
Checkpoint make_checkpoint(const CaptionModel<T>& model, const Vocabulary& vocab,
                           int max_len);

/// Rebuilds the model from the stored configuration and copies the stored
/// values into it. Throws InputError when names or shapes disagree.
template <typename T>
CaptionModel<T> model_from_checkpoint(const Checkpoint& ckpt);

// RCKP layout, little-endian: "RCKP", u32 version, u32 json_length, JSON
// metadata, then per tensor: u32 name_length, name, u32 rank, rank x u32
// extents, f32 payload.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace refcap
