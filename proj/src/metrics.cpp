#include "refcap/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace refcap::metrics {
namespace {

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts ngrams(const Sentence& s, std::size_t n) {
  NgramCounts out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    out[std::vector<std::string>(s.begin() + i, s.begin() + i + n)] += 1.0;
  }
  return out;
}

void check_corpus(const EvalCorpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("empty evaluation corpus");
  for (const auto& item : corpus) {
    if (item.references.empty()) {
      throw std::invalid_argument("evaluation item without references");
    }
  }
}

}  // namespace

double bleu(const EvalCorpus& corpus, int max_n) {
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("BLEU order must be 1..4");
  check_corpus(corpus);
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (const auto& item : corpus) {
    const double c = static_cast<double>(item.candidate.size());
    cand_len += c;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : item.references) {
      const double rl = static_cast<double>(r.size());
      const double diff = std::abs(rl - c), best_diff = std::abs(best - c);
      if (diff < best_diff || (diff == best_diff && rl < best)) best = rl;
    }
    ref_len += best;
    for (int n = 1; n <= max_n; ++n) {
      const auto cand = ngrams(item.candidate, static_cast<std::size_t>(n));
      NgramCounts max_ref;
      for (const auto& r : item.references) {
        for (const auto& [g, cnt] : ngrams(r, static_cast<std::size_t>(n))) {
          max_ref[g] = std::max(max_ref[g], cnt);
        }
      }
      for (const auto& [g, cnt] : cand) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[n - 1] += std::min(cnt, it->second);
        total[n - 1] += cnt;
      }
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    // No candidate n-grams of this order anywhere: the order is vacuous.
    if (total[n] == 0.0) continue;
    if (matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const EvalCorpus& corpus, double beta) {
  check_corpus(corpus);
  double total = 0.0;
  for (const auto& item : corpus) {
    double best = 0.0;
    for (const auto& r : item.references) {
      const double lcs = static_cast<double>(lcs_length(item.candidate, r));
      if (lcs == 0.0 || item.candidate.empty() || r.empty()) continue;
      const double p = lcs / static_cast<double>(item.candidate.size());
      const double rec = lcs / static_cast<double>(r.size());
      const double f = (1.0 + beta * beta) * p * rec / (rec + beta * beta * p);
      best = std::max(best, f);
    }
    total += best;
  }
  return total / static_cast<double>(corpus.size());
}

namespace {

struct TfIdf {
  std::array<NgramCounts, 4> vec;
  std::array<double, 4> norm{};
  double length = 0.0;
};

TfIdf tfidf(const Sentence& s, const NgramCounts& doc_freq, double log_images) {
  TfIdf out;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& [g, tf] : ngrams(s, n)) {
      auto it = doc_freq.find(g);
      const double df = std::log(std::max(1.0, it == doc_freq.end() ? 0.0 : it->second));
      const double w = tf * (log_images - df);
      out.vec[n - 1][g] = w;
      out.norm[n - 1] += w * w;
    }
    out.norm[n - 1] = std::sqrt(out.norm[n - 1]);
  }
  out.length = static_cast<double>(s.size());
  return out;
}

double cider_similarity(const TfIdf& hyp, const TfIdf& ref, const CiderOptions& o) {
  const double delta = hyp.length - ref.length;
  double total = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    double val = 0.0;
    for (const auto& [g, w] : hyp.vec[n]) {
      auto it = ref.vec[n].find(g);
      if (it == ref.vec[n].end()) continue;
      val += (o.cider_d ? std::min(w, it->second) : w) * it->second;
    }
    if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) {
      val /= hyp.norm[n] * ref.norm[n];
    } else {
      val = 0.0;
    }
    if (o.cider_d) val *= std::exp(-(delta * delta) / (2.0 * o.sigma * o.sigma));
    total += val;
  }
  return total / 4.0;
}

}  // namespace

double cider(const EvalCorpus& corpus, const CiderOptions& options) {
  check_corpus(corpus);
  if (corpus.size() == 1) {
    std::cerr << "warning: CIDEr over a single image has zero IDF everywhere; "
                 "returning 0\n";
    return 0.0;
  }
  NgramCounts doc_freq;
  for (const auto& item : corpus) {
    std::set<std::vector<std::string>> seen;
    for (const auto& r : item.references) {
      for (std::size_t n = 1; n <= 4; ++n) {
        for (const auto& [g, c] : ngrams(r, n)) seen.insert(g);
      }
    }
    for (const auto& g : seen) doc_freq[g] += 1.0;
  }
  const double log_images = std::log(static_cast<double>(corpus.size()));
  double total = 0.0;
  for (const auto& item : corpus) {
    const auto hyp = tfidf(item.candidate, doc_freq, log_images);
    double score = 0.0;
    for (const auto& r : item.references) {
      score += cider_similarity(hyp, tfidf(r, doc_freq, log_images), options);
    }
    total += 10.0 * score / static_cast<double>(item.references.size());
  }
  return total / static_cast<double>(corpus.size());
}

std::string crude_stem(const std::string& w) {
  auto ends = [&](const char* suf) {
    const std::size_t n = std::char_traits<char>::length(suf);
    return w.size() > n + 2 && w.compare(w.size() - n, n, suf) == 0;
  };
  for (const char* suf : {"ing", "edly", "ed", "es", "ly", "s"}) {
    if (ends(suf)) return w.substr(0, w.size() - std::char_traits<char>::length(suf));
  }
  return w;
}

namespace {

// Branch-and-bound search for a maximum-match alignment with the fewest
// chunks. Candidate positions are visited in order; each either maps to an
// unused reference position carrying the same key or stays unmatched.
class AlignmentSearch {
 public:
  AlignmentSearch(std::vector<std::string> cand, std::vector<std::string> ref)
      : cand_(std::move(cand)), ref_(std::move(ref)), used_(ref_.size(), false) {
    std::unordered_map<std::string, std::size_t> cc, rc;
    for (const auto& w : cand_) ++cc[w];
    for (const auto& w : ref_) ++rc[w];
    for (const auto& [w, n] : cc) {
      auto it = rc.find(w);
      if (it != rc.end()) target_ += std::min(n, it->second);
    }
    // Matches still obtainable from positions i.. (upper bound).
    suffix_.assign(cand_.size() + 1, 0);
    for (std::size_t i = cand_.size(); i-- > 0;) {
      suffix_[i] = suffix_[i + 1] + (rc.count(cand_[i]) ? 1 : 0);
    }
  }

  Alignment run() {
    if (target_ == 0) return {};
    dfs(0, 0, 0, kNone);
    return {target_, best_chunks_};
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kBudget = 2'000'000;

  void dfs(std::size_t i, std::size_t matches, std::size_t chunks, std::size_t prev) {
    if (++visited_ > kBudget && best_chunks_ != kNone) return;
    if (chunks >= best_chunks_) return;
    if (matches + suffix_[i] < target_) return;
    if (i == cand_.size()) {
      if (matches == target_) best_chunks_ = chunks;
      return;
    }
    // Extending the current chunk first finds low-chunk solutions early.
    if (prev != kNone && prev + 1 < ref_.size() && !used_[prev + 1] &&
        ref_[prev + 1] == cand_[i]) {
      used_[prev + 1] = true;
      dfs(i + 1, matches + 1, chunks, prev + 1);
      used_[prev + 1] = false;
    }
    for (std::size_t j = 0; j < ref_.size(); ++j) {
      if (used_[j] || ref_[j] != cand_[i]) continue;
      if (prev != kNone && j == prev + 1) continue;
      used_[j] = true;
      dfs(i + 1, matches + 1, chunks + 1, j);
      used_[j] = false;
    }
    dfs(i + 1, matches, chunks, kNone);
  }

  std::vector<std::string> cand_, ref_;
  std::vector<bool> used_;
  std::vector<std::size_t> suffix_;
  std::size_t target_ = 0;
  std::size_t best_chunks_ = kNone;
  std::size_t visited_ = 0;
};

}  // namespace

Alignment align(const Sentence& candidate, const Sentence& reference, bool stem) {
  auto keys = [&](const Sentence& s) {
    std::vector<std::string> out;
    for (const auto& w : s) out.push_back(stem ? crude_stem(w) : w);
    return out;
  };
  return AlignmentSearch(keys(candidate), keys(reference)).run();
}

double meteor_simplified(const EvalCorpus& corpus, const MeteorOptions& o) {
  check_corpus(corpus);
  double total = 0.0;
  for (const auto& item : corpus) {
    double best = 0.0;
    for (const auto& r : item.references) {
      const auto a = align(item.candidate, r, o.stem);
      if (a.matches == 0) continue;
      const double m = static_cast<double>(a.matches);
      const double p = m / static_cast<double>(item.candidate.size());
      const double rec = m / static_cast<double>(r.size());
      const double fmean = p * rec / (o.alpha * p + (1.0 - o.alpha) * rec);
      const double penalty = o.gamma * std::pow(static_cast<double>(a.chunks) / m, o.beta);
      best = std::max(best, fmean * (1.0 - penalty));
    }
    total += best;
  }
  return total / static_cast<double>(corpus.size());
}

std::map<std::string, double> evaluation_report(const EvalCorpus& corpus) {
  std::map<std::string, double> r;
  for (int n = 1; n <= 4; ++n) r["BLEU-" + std::to_string(n)] = 100.0 * bleu(corpus, n);
  r["METEOR"] = 100.0 * meteor_simplified(corpus);
  r["ROUGE-L"] = 100.0 * rouge_l(corpus);
  r["CIDEr"] = 100.0 * cider(corpus);
  return r;
}

}  // namespace refcap::metrics
