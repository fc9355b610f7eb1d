#pragma once

#include <map>
#include <string>
#include <vector>

namespace refcap::metrics {

using Sentence = std::vector<std::string>;

struct EvalItem {
  Sentence candidate;
  std::vector<Sentence> references;  // at least one
};

using EvalCorpus = std::vector<EvalItem>;

/// Corpus-level BLEU-N: clipped n-gram precisions pooled over the corpus,
/// geometric mean over n = 1..N, brevity penalty exp(1 - r/c) when c < r
/// where r sums each image's closest reference length. N in [1, 4].
/// An order with no candidate n-grams in the whole corpus is skipped.
double bleu(const EvalCorpus& corpus, int max_n);

/// Mean over images of the best LCS F-measure against any reference.
double rouge_l(const EvalCorpus& corpus, double beta = 1.2);

struct CiderOptions {
  double sigma = 6.0;
  // CIDEr-D: clipped term frequencies and a Gaussian length penalty.
  bool cider_d = true;
};

/// TF-IDF n-gram cosine similarity (n = 1..4) averaged over n and
/// references, times 10. IDF comes from the reference sets.
double cider(const EvalCorpus& corpus, const CiderOptions& options = {});

struct MeteorOptions {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
  bool stem = false;  // second matching stage on crude suffix-stripped stems
};

/// Exact-match (optionally stemmed) unigram alignment scored with the
/// METEOR F-mean and fragmentation penalty, without synonym matching.
double meteor_simplified(const EvalCorpus& corpus, const MeteorOptions& options = {});

/// Longest common subsequence length.
std::size_t lcs_length(const Sentence& a, const Sentence& b);

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Maximum-match unigram alignment with the fewest chunks.
Alignment align(const Sentence& candidate, const Sentence& reference, bool stem = false);

std::string crude_stem(const std::string& word);

/// BLEU-1..4, METEOR, ROUGE-L and CIDEr scaled by 100.
std::map<std::string, double> evaluation_report(const EvalCorpus& corpus);

}  // namespace refcap::metrics
