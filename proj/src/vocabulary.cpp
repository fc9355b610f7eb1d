#include "refcap/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "json.hpp"
#include "refcap/errors.hpp"

namespace refcap {
namespace {

const char* const kReserved[kNumReserved] = {"<pad>", "<start>", "<end>",
                                             "<unk>"};

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : raw) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (u < 0x80 && std::ispunct(u)) {
      continue;
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : kReserved) add(t);
}

void Vocabulary::add(std::string token) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences,
                             int min_count) {
  if (min_count < 1) throw InputError("min_count must be >= 1");
  if (sentences.empty()) {
    throw InputError("cannot build a vocabulary from an empty training split");
  }
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& s : sentences) {
    for (const auto& t : s) {
      if (counts[t]++ == 0) order.push_back(t);
    }
  }
  Vocabulary v;
  v.min_count_ = min_count;
  for (auto& t : order) {
    if (counts[t] >= min_count && !v.contains(t)) v.add(t);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   int min_count) {
  if (tokens.size() < kNumReserved) {
    throw InputError("vocabulary is missing reserved tokens");
  }
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != kReserved[i]) {
      throw InputError("vocabulary id " + std::to_string(i) + " must be " +
                       kReserved[i] + ", found " + tokens[i]);
    }
  }
  Vocabulary v;
  v.min_count_ = min_count;
  for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw InputError("duplicate token " + tokens[i]);
    v.add(std::move(tokens[i]));
  }
  return v;
}

Vocabulary Vocabulary::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed vocabulary JSON " + path.string() + ": " + e.what());
  }
  if (!j.contains("tokens") || !j["tokens"].is_object()) {
    throw InputError("vocabulary JSON lacks a \"tokens\" object");
  }
  std::map<TokenId, std::string> by_id;
  for (auto& [tok, id] : j["tokens"].items()) by_id[id.get<TokenId>()] = tok;
  std::vector<std::string> tokens;
  TokenId expect = 0;
  for (auto& [id, tok] : by_id) {
    if (id != expect++) throw InputError("vocabulary ids are not contiguous");
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens), j.value("min_count", kDefaultMinCount));
}

void Vocabulary::save_json(const std::filesystem::path& path) const {
  nlohmann::json toks = nlohmann::json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    toks[tokens_[i]] = static_cast<TokenId>(i);
  }
  nlohmann::json j = {{"tokens", toks}, {"min_count", min_count_}};
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

EncodedCaption encode_tokens(const Vocabulary& vocab,
                             std::span<const std::string> tokens, int max_len) {
  if (max_len < 1) throw InputError("max_len must be >= 1");
  if (tokens.empty()) throw InputError("caption has no tokens");
  const std::size_t width = static_cast<std::size_t>(max_len) + 2;
  const std::size_t n = std::min(tokens.size(), static_cast<std::size_t>(max_len));
  EncodedCaption enc;
  enc.ids.assign(width, kPadId);
  enc.ids[0] = kStartId;
  for (std::size_t i = 0; i < n; ++i) enc.ids[i + 1] = vocab.id(tokens[i]);
  enc.ids[n + 1] = kEndId;
  enc.true_length = n + 2;
  return enc;
}

EncodedCaption encode_caption(const Vocabulary& vocab, std::string_view raw,
                              int max_len) {
  const auto tokens = tokenize(raw);
  if (tokens.empty()) {
    throw InputError("caption \"" + std::string(raw) + "\" has no tokens");
  }
  return encode_tokens(vocab, tokens, max_len);
}

std::vector<std::string> decode_tokens(const Vocabulary& vocab,
                                       std::span<const TokenId> ids) {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id == kEndId) break;
    if (id == kStartId || id == kPadId) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s.push_back(' ');
    s += t;
  }
  return s;
}

}  // namespace refcap
