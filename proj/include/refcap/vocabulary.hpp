#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace refcap {

using TokenId = std::int64_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kStartId = 1;
inline constexpr TokenId kEndId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kNumReserved = 4;

inline constexpr int kDefaultMinCount = 5;
inline constexpr int kDefaultMaxLen = 50;

/// Lowercases, removes ASCII punctuation and splits on whitespace.
std::vector<std::string> tokenize(std::string_view raw);

/// Bidirectional token <-> id map. Ids are contiguous from 0 and the four
/// reserved tokens always occupy ids 0..3.
class Vocabulary {
 public:
  Vocabulary();

  // Builds from tokenized sentences; tokens seen at least min_count times
  // are added in order of first appearance.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences,
                          int min_count);
  static Vocabulary from_json_file(const std::filesystem::path& path);
  void save_json(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  int min_count() const { return min_count_; }

  // FNV-1a over the tokens in id order; identifies a vocabulary in
  // checkpoints.
  std::uint64_t fingerprint() const;

  static Vocabulary from_tokens(std::vector<std::string> tokens, int min_count);

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  int min_count_ = kDefaultMinCount;
};

/// Fixed-width id sequence: <start> w1 .. wn <end> <pad>...
struct EncodedCaption {
  std::vector<TokenId> ids;     // max_len + 2 entries
  std::size_t true_length = 0;  // includes <start> and <end>

  std::span<const TokenId> active() const {
    return std::span<const TokenId>(ids).first(true_length);
  }
};

/// Throws InputError when no token survives tokenization.
EncodedCaption encode_caption(const Vocabulary& vocab, std::string_view raw,
                              int max_len);
EncodedCaption encode_tokens(const Vocabulary& vocab,
                             std::span<const std::string> tokens, int max_len);

/// Tokens between <start> and <end>, skipping reserved ids other than <unk>.
std::vector<std::string> decode_tokens(const Vocabulary& vocab,
                                       std::span<const TokenId> ids);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace refcap
