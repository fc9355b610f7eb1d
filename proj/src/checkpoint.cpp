#include "refcap/checkpoint.hpp"

#include "refcap/byte_io.hpp"
#include "refcap/errors.hpp"

namespace refcap {

using nlohmann::json;

Vocabulary Checkpoint::vocabulary() const {
  auto v = Vocabulary::from_tokens(vocab_tokens, vocab_min_count);
  if (v.fingerprint() != vocab_fingerprint) {
    throw InputError("checkpoint vocabulary does not match its fingerprint");
  }
  return v;
}

template <typename T>
Checkpoint make_checkpoint(const CaptionModel<T>& model, const Vocabulary& vocab,
                           int max_len) {
  Checkpoint c;
  c.model = model.config();
  c.vocab_tokens = vocab.tokens();
  c.vocab_min_count = vocab.min_count();
  c.vocab_fingerprint = vocab.fingerprint();
  c.max_len = max_len;
  for (const auto& [name, t] : model.params().entries()) {
    c.tensors.push_back({name, t.shape(),
                         std::vector<float>(t.value().begin(), t.value().end())});
  }
  return c;
}

template <typename T>
CaptionModel<T> model_from_checkpoint(const Checkpoint& ckpt) {
  CaptionModel<T> model(ckpt.model, 0);
  auto& entries = model.params().entries();
  if (entries.size() != ckpt.tensors.size()) {
    throw InputError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                     " tensors, model expects " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& [name, t] = entries[i];
    const auto& stored = ckpt.tensors[i];
    if (stored.name != name || stored.shape != t.shape()) {
      throw InputError("checkpoint tensor " + stored.name + " " +
                       shape_to_string(stored.shape) + " does not match " + name +
                       " " + shape_to_string(t.shape()));
    }
    std::copy(stored.values.begin(), stored.values.end(), t.value().begin());
  }
  return model;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  json meta = {{"model", ckpt.model.to_json()},
               {"train", ckpt.train},
               {"vocab", {{"tokens", ckpt.vocab_tokens},
                          {"min_count", ckpt.vocab_min_count},
                          {"fingerprint", ckpt.vocab_fingerprint}}},
               {"max_len", ckpt.max_len},
               {"epoch", ckpt.epoch},
               {"best_bleu", ckpt.best_bleu},
               {"tensor_count", ckpt.tensors.size()}};
  const std::string text = meta.dump();
  byte_io::Writer w;
  w.bytes("RCKP", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  for (const auto& t : ckpt.tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto e : t.shape) w.u32(static_cast<std::uint32_t>(e));
    for (float v : t.values) w.f32(v);
  }
  return std::move(w.buffer());
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  byte_io::Reader rd(bytes);
  Checkpoint c;
  try {
    if (rd.str(4) != "RCKP") throw InputError("not a checkpoint (bad magic)");
    const auto version = rd.u32();
    if (version != kCheckpointVersion) {
      throw InputError("unsupported checkpoint version " + std::to_string(version));
    }
    const json meta = json::parse(rd.str(rd.u32()));
    c.model = ModelConfig::from_json(meta.at("model"));
    c.train = meta.at("train");
    c.vocab_tokens = meta.at("vocab").at("tokens").get<std::vector<std::string>>();
    c.vocab_min_count = meta.at("vocab").at("min_count").get<int>();
    c.vocab_fingerprint = meta.at("vocab").at("fingerprint").get<std::uint64_t>();
    c.max_len = meta.at("max_len").get<int>();
    c.epoch = meta.at("epoch").get<int>();
    c.best_bleu = meta.at("best_bleu").get<double>();
    const auto count = meta.at("tensor_count").get<std::size_t>();
    for (std::size_t n = 0; n < count; ++n) {
      NamedTensor t;
      t.name = rd.str(rd.u32());
      const auto rank = rd.u32();
      for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(rd.u32());
      const std::size_t size = shape_size(t.shape);
      if (rd.remaining() / 4 < size) {
        throw byte_io::Truncated("tensor " + t.name + " payload cut short");
      }
      t.values.resize(size);
      for (auto& v : t.values) v = rd.f32();
      c.tensors.push_back(std::move(t));
    }
    if (rd.remaining() != 0) throw InputError("trailing bytes after checkpoint tensors");
  } catch (const byte_io::Truncated& e) {
    throw InputError(std::string("truncated checkpoint: ") + e.what());
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed checkpoint metadata: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  byte_io::write_file(path.string(), serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(byte_io::read_file(path.string()));
}

template Checkpoint make_checkpoint<float>(const CaptionModel<float>&, const Vocabulary&, int);
template Checkpoint make_checkpoint<double>(const CaptionModel<double>&, const Vocabulary&, int);
template CaptionModel<float> model_from_checkpoint<float>(const Checkpoint&);
template CaptionModel<double> model_from_checkpoint<double>(const Checkpoint&);

}  // namespace refcap
