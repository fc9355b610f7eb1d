#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace refcap {

/// Attention weights behind each emitted token: the visual distribution over
/// the k regions and the reflective distribution over the t hidden states
/// produced so far. Either list is empty when its module is disabled.
struct AttentionTrace {
  std::string image_id;
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> alpha_vis;
  std::vector<std::vector<double>> alpha_ref;

  nlohmann::json to_json() const;
  static AttentionTrace from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
};

}  // namespace refcap
