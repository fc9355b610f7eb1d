#pragma once

#include <vector>

#include "refcap/model.hpp"
#include "refcap/trace.hpp"

namespace refcap {

inline constexpr std::size_t kDefaultBeamSize = 5;

/// One decoded caption. `ids` excludes <start> and <end>; `log_prob` sums
/// the log-probabilities of every emitted token, <end> included.
struct Caption {
  std::vector<TokenId> ids;
  double log_prob = 0.0;
  double score = 0.0;  // log_prob, or length-normalized when requested
  bool finished = false;  // emitted <end> before max_len
  std::vector<std::vector<double>> alpha_vis;  // per emitted word
  std::vector<std::vector<double>> alpha_ref;
};

struct BeamOptions {
  std::size_t beam_size = kDefaultBeamSize;
  std::size_t max_len = static_cast<std::size_t>(kDefaultMaxLen) + 2;
  // Ranking score is log_prob / len^length_penalty; 0 disables normalization.
  double length_penalty = 0.0;
};

/// Feeds the argmax token back at every step until <end> or max_len tokens.
/// <pad> and <start> are never emitted; ties break toward the lower id.
template <typename T>
Caption greedy_decode(const CaptionModel<T>& model, const FeatureRecord& record,
                      std::size_t max_len);

/// Beam search over summed log-probabilities. Hypotheses that emit <end>
/// retire and shrink the live beam. Returns candidates best first.
template <typename T>
std::vector<Caption> beam_search(const CaptionModel<T>& model,
                                 const FeatureRecord& record,
                                 const BeamOptions& options);

/// Teacher-forced log-probability of `ids` (without <start>), followed by
/// <end> when with_end is set.
template <typename T>
double score_sequence(const CaptionModel<T>& model, const FeatureRecord& record,
                      std::span<const TokenId> ids, bool with_end);

AttentionTrace make_trace(const Caption& caption, const Vocabulary& vocab,
                          const std::string& image_id);

}  // namespace refcap
