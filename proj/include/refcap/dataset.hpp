#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "refcap/features.hpp"
#include "refcap/vocabulary.hpp"

namespace refcap {

enum class Split { kTrain, kVal, kTest };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);  // throws InputError

struct ManifestEntry {
  std::string id;
  Split split = Split::kTrain;
  std::vector<std::string> captions;
};

/// Image ids with their split and raw captions. Ids are unique, so splits
/// are disjoint; every image carries at least one caption.
using CaptionManifest = std::vector<ManifestEntry>;

CaptionManifest parse_manifest(std::string_view json_text);
CaptionManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CaptionManifest& manifest,
                   const std::filesystem::path& path);

struct PreparedImage {
  std::string id;
  Split split = Split::kTrain;
  std::vector<std::string> raw;
  std::vector<EncodedCaption> captions;
  // Tokenized raw captions, untruncated, for metric references.
  std::vector<std::vector<std::string>> references;
};

struct PreparedDataset {
  Vocabulary vocab;
  int max_len = kDefaultMaxLen;
  std::vector<PreparedImage> images;
  FeatureStore features;
  std::size_t rejected_captions = 0;

  std::vector<const PreparedImage*> split(Split s) const;
};

/// Builds the vocabulary from the train split and encodes every caption.
/// Every manifest id must be present in the feature store.
PreparedDataset prepare_dataset(const CaptionManifest& manifest,
                                FeatureStore features, int min_count,
                                int max_len);

// Writes vocab.json, captions.json and features.rcf1 under dir.
void save_prepared(const PreparedDataset& data, const std::filesystem::path& dir);
PreparedDataset load_prepared(const std::filesystem::path& dir);

}  // namespace refcap
