#include "refcap/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace refcap {
namespace {

template <typename T>
std::vector<double> log_softmax(const Tensor<T>& logits) {
  const auto v = logits.value();
  const double mx = static_cast<double>(*std::max_element(v.begin(), v.end()));
  double sum = 0.0;
  for (T x : v) sum += std::exp(static_cast<double>(x) - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) - lse;
  return out;
}

bool emittable(TokenId id) { return id != kPadId && id != kStartId; }

template <typename T>
std::vector<double> to_double(const Tensor<T>& t) {
  return std::vector<double>(t.value().begin(), t.value().end());
}

template <typename T>
void record_attention(Caption& c, const StepOutput<T>& s) {
  if (s.alpha_vis.defined()) c.alpha_vis.push_back(to_double(s.alpha_vis));
  if (s.alpha_ref.defined()) c.alpha_ref.push_back(to_double(s.alpha_ref));
}

double ranking_score(const Caption& c, double length_penalty) {
  if (length_penalty == 0.0) return c.log_prob;
  const double len = static_cast<double>(c.ids.size() + (c.finished ? 1 : 0));
  return c.log_prob / std::pow(std::max(len, 1.0), length_penalty);
}

template <typename T>
struct Beam {
  Caption caption;
  DecoderState<T> state;
  TokenId last = kStartId;
};

}  // namespace

template <typename T>
Caption greedy_decode(const CaptionModel<T>& model, const FeatureRecord& record,
                      std::size_t max_len) {
  Graph<T> g(false);
  auto ctx = model.encode(g, record);
  auto state = model.initial_state();
  Caption c;
  TokenId word = kStartId;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto s = model.step(g, ctx, word, state);
    const auto lp = log_softmax(s.logits);
    TokenId best = -1;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const auto id = static_cast<TokenId>(i);
      if (!emittable(id)) continue;
      if (best < 0 || lp[i] > lp[static_cast<std::size_t>(best)]) best = id;
    }
    c.log_prob += lp[static_cast<std::size_t>(best)];
    if (best == kEndId) {
      c.finished = true;
      break;
    }
    record_attention(c, s);
    c.ids.push_back(best);
    word = best;
  }
  c.score = c.log_prob;
  return c;
}

template <typename T>
std::vector<Caption> beam_search(const CaptionModel<T>& model,
                                 const FeatureRecord& record,
                                 const BeamOptions& options) {
  const std::size_t width = std::max<std::size_t>(options.beam_size, 1);
  Graph<T> g(false);
  const auto ctx = model.encode(g, record);

  std::vector<Beam<T>> live(1);
  live[0].state = model.initial_state();
  std::vector<Caption> done;

  struct Candidate {
    double score;
    std::size_t beam;
    TokenId token;
  };

  for (std::size_t t = 0; t < options.max_len && !live.empty(); ++t) {
    std::vector<StepOutput<T>> outs;
    std::vector<DecoderState<T>> states;
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      DecoderState<T> st = live[b].state;
      outs.push_back(model.step(g, ctx, live[b].last, st));
      states.push_back(std::move(st));
      const auto lp = log_softmax(outs.back().logits);
      for (std::size_t i = 0; i < lp.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        if (!emittable(id)) continue;
        cands.push_back({live[b].caption.log_prob + lp[i], b, id});
      }
    }
    const std::size_t keep = std::min(width - done.size(), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.token != b.token) return a.token < b.token;
                        return a.beam < b.beam;
                      });
    std::vector<Beam<T>> next;
    for (std::size_t n = 0; n < keep; ++n) {
      const auto& cand = cands[n];
      Beam<T> nb;
      nb.caption = live[cand.beam].caption;
      nb.caption.log_prob = cand.score;
      if (cand.token == kEndId) {
        nb.caption.finished = true;
        done.push_back(std::move(nb.caption));
        continue;
      }
      record_attention(nb.caption, outs[cand.beam]);
      nb.caption.ids.push_back(cand.token);
      nb.state = states[cand.beam];
      nb.last = cand.token;
      next.push_back(std::move(nb));
    }
    live = std::move(next);
  }
  for (auto& b : live) done.push_back(std::move(b.caption));
  for (auto& c : done) c.score = ranking_score(c, options.length_penalty);
  std::stable_sort(done.begin(), done.end(), [](const Caption& a, const Caption& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ids < b.ids;
  });
  return done;
}

template <typename T>
double score_sequence(const CaptionModel<T>& model, const FeatureRecord& record,
                      std::span<const TokenId> ids, bool with_end) {
  Graph<T> g(false);
  auto ctx = model.encode(g, record);
  auto state = model.initial_state();
  double total = 0.0;
  TokenId word = kStartId;
  const std::size_t n = ids.size() + (with_end ? 1 : 0);
  for (std::size_t t = 0; t < n; ++t) {
    auto s = model.step(g, ctx, word, state);
    const TokenId target = t < ids.size() ? ids[t] : kEndId;
    total += log_softmax(s.logits)[static_cast<std::size_t>(target)];
    word = target;
  }
  return total;
}

AttentionTrace make_trace(const Caption& caption, const Vocabulary& vocab,
                          const std::string& image_id) {
  AttentionTrace tr;
  tr.image_id = image_id;
  for (TokenId id : caption.ids) tr.tokens.push_back(vocab.token(id));
  tr.alpha_vis = caption.alpha_vis;
  tr.alpha_ref = caption.alpha_ref;
  return tr;
}

template Caption greedy_decode<float>(const CaptionModel<float>&, const FeatureRecord&,
                                      std::size_t);
template Caption greedy_decode<double>(const CaptionModel<double>&, const FeatureRecord&,
                                       std::size_t);
template std::vector<Caption> beam_search<float>(const CaptionModel<float>&,
                                                 const FeatureRecord&, const BeamOptions&);
template std::vector<Caption> beam_search<double>(const CaptionModel<double>&,
                                                  const FeatureRecord&, const BeamOptions&);
template double score_sequence<float>(const CaptionModel<float>&, const FeatureRecord&,
                                      std::span<const TokenId>, bool);
template double score_sequence<double>(const CaptionModel<double>&, const FeatureRecord&,
                                       std::span<const TokenId>, bool);

}  // namespace refcap
