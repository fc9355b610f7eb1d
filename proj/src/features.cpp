#include "refcap/features.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "refcap/byte_io.hpp"
#include "refcap/errors.hpp"

namespace refcap {

namespace byte_io {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to " + path);
}

}  // namespace byte_io

namespace {

using Kind = FeatureFileError::Kind;
constexpr char kMagic[4] = {'R', 'C', 'F', '1'};

bool all_finite(std::span<const float> v) {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

FeatureStore::FeatureStore(std::size_t dim, std::size_t global_dim)
    : dim_(dim), global_dim_(global_dim) {}

void FeatureStore::add(FeatureRecord record) {
  const std::string& id = record.image_id;
  if (index_.count(id)) {
    throw FeatureFileError(Kind::kDuplicateId, "duplicate image id \"" + id + "\"");
  }
  if (record.regions == 0 || record.dim != dim_ ||
      record.spatial.size() != record.regions * dim_ ||
      record.global.size() != global_dim_) {
    throw FeatureFileError(Kind::kInvalidRecord,
                           "record \"" + id + "\" does not match store dimensions");
  }
  if (!all_finite(record.spatial) || !all_finite(record.global)) {
    throw FeatureFileError(Kind::kInvalidRecord,
                           "record \"" + id + "\" contains non-finite values");
  }
  index_.emplace(id, records_.size());
  records_.push_back(std::move(record));
}

const FeatureRecord& FeatureStore::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown image id \"" + id + "\"");
  return records_[it->second];
}

std::vector<std::uint8_t> serialize_features(const FeatureStore& store) {
  byte_io::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kFeatureFormatVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u32(static_cast<std::uint32_t>(store.global_dim()));
  for (const auto& r : store.records()) {
    if (r.image_id.size() > 0xffff) {
      throw InputError("image id longer than 65535 bytes: " + r.image_id);
    }
    w.u16(static_cast<std::uint16_t>(r.image_id.size()));
    w.bytes(r.image_id.data(), r.image_id.size());
    w.u32(static_cast<std::uint32_t>(r.regions));
    for (float v : r.spatial) w.f32(v);
    for (float v : r.global) w.f32(v);
  }
  return std::move(w.buffer());
}

FeatureStore parse_features(std::span<const std::uint8_t> bytes) {
  byte_io::Reader rd(bytes);
  try {
    const std::string magic = rd.str(4);
    if (magic != std::string(kMagic, 4)) {
      throw FeatureFileError(Kind::kBadMagic, "bad magic \"" + magic + "\", expected RCF1");
    }
    const auto version = rd.u32();
    if (version != kFeatureFormatVersion) {
      throw FeatureFileError(Kind::kVersionMismatch,
                             "unsupported feature file version " + std::to_string(version));
    }
    const auto count = rd.u32();
    const auto dim = rd.u32();
    const auto gdim = rd.u32();
    if (dim == 0) throw FeatureFileError(Kind::kInvalidRecord, "feature dimension is zero");
    FeatureStore store(dim, gdim);
    for (std::uint32_t n = 0; n < count; ++n) {
      FeatureRecord r;
      r.image_id = rd.str(rd.u16());
      r.regions = rd.u32();
      r.dim = dim;
      if (r.regions == 0) {
        throw FeatureFileError(Kind::kInvalidRecord,
                               "record \"" + r.image_id + "\" has zero regions");
      }
      if (rd.remaining() / 4 < r.regions * dim + gdim) {
        throw byte_io::Truncated("record \"" + r.image_id + "\" is cut short");
      }
      r.spatial.resize(r.regions * dim);
      for (auto& v : r.spatial) v = rd.f32();
      r.global.resize(gdim);
      for (auto& v : r.global) v = rd.f32();
      store.add(std::move(r));
    }
    return store;
  } catch (const byte_io::Truncated& e) {
    throw FeatureFileError(Kind::kTruncated, std::string("truncated feature file: ") + e.what());
  }
}

FeatureStore load_features(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = byte_io::read_file(path.string());
  } catch (const InputError& e) {
    throw FeatureFileError(Kind::kIo, e.what());
  }
  return parse_features(bytes);
}

void save_features(const FeatureStore& store, const std::filesystem::path& path) {
  byte_io::write_file(path.string(), serialize_features(store));
}

FeatureRecord synth_features(std::uint64_t seed, const std::string& image_id,
                             std::size_t regions, std::size_t dim,
                             std::size_t global_dim) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : image_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  FeatureRecord r;
  r.image_id = image_id;
  r.regions = regions;
  r.dim = dim;
  r.spatial.resize(regions * dim);
  for (auto& v : r.spatial) v = uni(rng);
  r.global.resize(global_dim);
  for (auto& v : r.global) v = uni(rng);
  return r;
}

}  // namespace refcap
