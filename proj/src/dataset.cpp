#include "refcap/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "refcap/errors.hpp"

namespace refcap {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw InputError("unknown split \"" + std::string(name) + "\"");
}

CaptionManifest parse_manifest(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest JSON: ") + e.what());
  }
  if (!j.is_array()) throw InputError("manifest must be a JSON array");
  CaptionManifest m;
  std::unordered_set<std::string> seen;
  try {
    for (const auto& e : j) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.split = parse_split(e.at("split").get<std::string>());
      entry.captions = e.at("captions").get<std::vector<std::string>>();
      if (entry.captions.empty()) {
        throw InputError("image \"" + entry.id + "\" has no captions");
      }
      if (!seen.insert(entry.id).second) {
        throw InputError("image \"" + entry.id + "\" listed more than once");
      }
      m.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest entry: ") + e.what());
  }
  return m;
}

CaptionManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void save_manifest(const CaptionManifest& manifest,
                   const std::filesystem::path& path) {
  json j = json::array();
  for (const auto& e : manifest) {
    j.push_back({{"id", e.id},
                 {"split", std::string(split_name(e.split))},
                 {"captions", e.captions}});
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

std::vector<const PreparedImage*> PreparedDataset::split(Split s) const {
  std::vector<const PreparedImage*> out;
  for (const auto& img : images) {
    if (img.split == s) out.push_back(&img);
  }
  return out;
}

PreparedDataset prepare_dataset(const CaptionManifest& manifest,
                                FeatureStore features, int min_count,
                                int max_len) {
  if (max_len < 1) throw InputError("max_len must be >= 1");
  for (const auto& e : manifest) {
    if (!features.contains(e.id)) {
      throw InputError("no features for manifest image \"" + e.id + "\"");
    }
  }
  std::vector<std::vector<std::string>> train_sentences;
  for (const auto& e : manifest) {
    if (e.split != Split::kTrain) continue;
    for (const auto& c : e.captions) {
      auto toks = tokenize(c);
      if (!toks.empty()) train_sentences.push_back(std::move(toks));
    }
  }
  PreparedDataset data;
  data.vocab = Vocabulary::build(train_sentences, min_count);
  data.max_len = max_len;
  for (const auto& e : manifest) {
    PreparedImage img;
    img.id = e.id;
    img.split = e.split;
    for (const auto& c : e.captions) {
      auto toks = tokenize(c);
      if (toks.empty()) {
        ++data.rejected_captions;
        continue;
      }
      img.raw.push_back(c);
      img.captions.push_back(encode_tokens(data.vocab, toks, max_len));
      img.references.push_back(std::move(toks));
    }
    if (img.captions.empty()) {
      throw InputError("image \"" + e.id + "\" has no usable captions");
    }
    data.images.push_back(std::move(img));
  }
  data.features = std::move(features);
  return data;
}

void save_prepared(const PreparedDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  data.vocab.save_json(dir / "vocab.json");
  json images = json::array();
  for (const auto& img : data.images) {
    json caps = json::array();
    for (std::size_t i = 0; i < img.captions.size(); ++i) {
      caps.push_back({{"raw", img.raw[i]},
                      {"ids", img.captions[i].ids},
                      {"length", img.captions[i].true_length}});
    }
    images.push_back({{"id", img.id},
                      {"split", std::string(split_name(img.split))},
                      {"captions", caps}});
  }
  json j = {{"max_len", data.max_len}, {"images", images}};
  std::ofstream out(dir / "captions.json");
  if (!out) throw InputError("cannot write " + (dir / "captions.json").string());
  out << j.dump() << '\n';
  save_features(data.features, dir / "features.rcf1");
}

PreparedDataset load_prepared(const std::filesystem::path& dir) {
  PreparedDataset data;
  data.vocab = Vocabulary::from_json_file(dir / "vocab.json");
  std::ifstream in(dir / "captions.json");
  if (!in) throw InputError("cannot open " + (dir / "captions.json").string());
  json j;
  try {
    in >> j;
    data.max_len = j.at("max_len").get<int>();
    for (const auto& ji : j.at("images")) {
      PreparedImage img;
      img.id = ji.at("id").get<std::string>();
      img.split = parse_split(ji.at("split").get<std::string>());
      for (const auto& jc : ji.at("captions")) {
        img.raw.push_back(jc.at("raw").get<std::string>());
        EncodedCaption enc;
        enc.ids = jc.at("ids").get<std::vector<TokenId>>();
        enc.true_length = jc.at("length").get<std::size_t>();
        img.captions.push_back(std::move(enc));
        img.references.push_back(tokenize(img.raw.back()));
      }
      data.images.push_back(std::move(img));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed captions.json: ") + e.what());
  }
  data.features = load_features(dir / "features.rcf1");
  for (const auto& img : data.images) {
    if (!data.features.contains(img.id)) {
      throw InputError("no features for prepared image \"" + img.id + "\"");
    }
  }
  return data;
}

}  // namespace refcap
