#include "refcap/trace.hpp"

#include <fstream>

#include "refcap/errors.hpp"

namespace refcap {

nlohmann::json AttentionTrace::to_json() const {
  return {{"image_id", image_id},
          {"tokens", tokens},
          {"alpha_vis", alpha_vis},
          {"alpha_ref", alpha_ref}};
}

AttentionTrace AttentionTrace::from_json(const nlohmann::json& j) {
  AttentionTrace t;
  try {
    t.image_id = j.at("image_id").get<std::string>();
    t.tokens = j.at("tokens").get<std::vector<std::string>>();
    t.alpha_vis = j.at("alpha_vis").get<std::vector<std::vector<double>>>();
    t.alpha_ref = j.at("alpha_ref").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed attention trace: ") + e.what());
  }
  return t;
}

void AttentionTrace::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

}  // namespace refcap
