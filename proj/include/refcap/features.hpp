#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace refcap {

/// Spatial features (k regions x dim) and a global feature for one image.
struct FeatureRecord {
  std::string image_id;
  std::size_t regions = 0;  // k
  std::size_t dim = 0;      // D
  std::vector<float> spatial;  // regions * dim, region-major
  std::vector<float> global;   // D_g

  std::span<const float> region(std::size_t i) const {
    return std::span<const float>(spatial).subspan(i * dim, dim);
  }
};

class FeatureFileError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kVersionMismatch, kTruncated, kDuplicateId,
                    kInvalidRecord };

  FeatureFileError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Immutable collection of feature records sharing dim and global_dim.
class FeatureStore {
 public:
  FeatureStore() = default;
  FeatureStore(std::size_t dim, std::size_t global_dim);

  // Validates the record against the store dimensions.
  void add(FeatureRecord record);

  std::size_t dim() const { return dim_; }
  std::size_t global_dim() const { return global_dim_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<FeatureRecord>& records() const { return records_; }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  // Throws std::out_of_range for an unknown id.
  const FeatureRecord& at(const std::string& id) const;

 private:
  std::size_t dim_ = 0;
  std::size_t global_dim_ = 0;
  std::vector<FeatureRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

// RCF1 layout, little-endian: "RCF1", u32 version, u32 record_count, u32 D,
// u32 D_g, then per record: u16 id_length, id bytes, u32 k, k*D f32, D_g f32.
FeatureStore load_features(const std::filesystem::path& path);
void save_features(const FeatureStore& store, const std::filesystem::path& path);
FeatureStore parse_features(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_features(const FeatureStore& store);

/// Deterministic pseudo-random record; values uniform in [-1, 1).
FeatureRecord synth_features(std::uint64_t seed, const std::string& image_id,
                             std::size_t regions, std::size_t dim,
                             std::size_t global_dim);

}  // namespace refcap
