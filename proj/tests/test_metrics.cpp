#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "refcap/metrics.hpp"
#include "oracle/metric_oracles.hpp"
#include "refcap/vocabulary.hpp"

using namespace refcap::metrics;
using oracle::brute_align;
using oracle::brute_bleu;
using oracle::brute_cider;
using oracle::brute_lcs;
using oracle::random_corpus;
using oracle::random_sentence;

namespace {

Sentence words(const std::string& s) { return refcap::tokenize(s); }

EvalCorpus single(const std::string& cand, std::vector<std::string> refs) {
  EvalItem item{words(cand), {}};
  for (const auto& r : refs) item.references.push_back(words(r));
  return {item};
}

}  // namespace

TEST_CASE("bleu examples") {
  for (int n = 1; n <= 4; ++n) {
    CHECK(bleu(single("a man rides a horse", {"a man rides a horse"}), n) == 1.0);
  }
  CHECK(bleu(single("x y z", {"a b c"}), 1) == 0.0);
  // Clipped unigram precision 1/4; the candidate is longer, so no brevity penalty.
  const auto c = single("the the the the", {"the cat"});
  CHECK(bleu(c, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(bleu(c, 1) == doctest::Approx(brute_bleu(c, 1)).epsilon(1e-12));
  // Shorter candidate pays exp(1 - r/c).
  const auto s = single("the cat", {"the cat sat down"});
  CHECK(bleu(s, 1) == doctest::Approx(std::exp(1.0 - 2.0)).epsilon(1e-14));
  // Orders longer than every candidate carry no evidence.
  CHECK(bleu(single("a dog", {"a dog"}), 4) == 1.0);
  CHECK(bleu(single("a", {"a b c d"}), 4) == doctest::Approx(std::exp(1.0 - 4.0)).epsilon(1e-14));
  CHECK_THROWS(bleu(c, 5));
  CHECK_THROWS(bleu({}, 1));
}

TEST_CASE("bleu matches brute-force counting on random corpora") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto corpus = random_corpus(rng, 1 + trial % 6, 6);
    for (int n = 1; n <= 4; ++n) {
      CHECK(bleu(corpus, n) == doctest::Approx(brute_bleu(corpus, n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bleu is non-increasing in the order on random corpora") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto corpus = random_corpus(rng, 5, 8);
    for (int n = 1; n < 4; ++n) CHECK(bleu(corpus, n + 1) <= bleu(corpus, n) + 1e-12);
  }
}

TEST_CASE("rouge-l examples") {
  CHECK(rouge_l(single("a b c", {"a b c"})) == 1.0);
  CHECK(rouge_l(single("a b c", {"x y"})) == 0.0);
  const auto a = words("a b c d"), b = words("a c b d");
  CHECK(lcs_length(a, b) == 3);
  CHECK(brute_lcs(a, b) == 3);
  const double p = 0.75, r = 0.75, beta = 1.2;
  const double f = (1 + beta * beta) * p * r / (r + beta * beta * p);
  CHECK(rouge_l(single("a b c d", {"a c b d"})) == doctest::Approx(f).epsilon(1e-15));
  // Best reference wins.
  CHECK(rouge_l(single("a b c", {"x", "a b c"})) == 1.0);
}

TEST_CASE("lcs matches subsequence enumeration") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_sentence(rng, 1, 9, 4), b = random_sentence(rng, 1, 9, 4);
    CHECK(lcs_length(a, b) == brute_lcs(a, b));
  }
}

TEST_CASE("cider examples") {
  CHECK(cider(single("a b c", {"a b c"})) == 0.0);

  // Ten images with disjoint vocabularies, candidate equal to every reference.
  EvalCorpus disjoint;
  for (int i = 0; i < 10; ++i) {
    const std::string p = "i" + std::to_string(i);
    Sentence s{p + "a", p + "b", p + "c", p + "d", p + "e"};
    disjoint.push_back({s, {s, s}});
  }
  CHECK(cider(disjoint) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(cider(disjoint) == doctest::Approx(brute_cider(disjoint)).epsilon(1e-12));

  EvalCorpus none;
  for (int i = 0; i < 4; ++i) {
    none.push_back({words("q r s t"), {{"a" + std::to_string(i), "b", "c", "d"}}});
  }
  CHECK(cider(none) == 0.0);
}

TEST_CASE("cider matches explicit tf-idf vectors on random corpora") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto corpus = random_corpus(rng, 2 + trial % 7, 7);
    CHECK(cider(corpus) == doctest::Approx(brute_cider(corpus)).epsilon(1e-10));
  }
}

TEST_CASE("plain cider skips clipping and the length penalty") {
  EvalCorpus c = {{words("a a b"), {words("a b c d e f g")}}, {words("x y"), {words("x y z")}}};
  const double d = cider(c, {.cider_d = true});
  const double plain = cider(c, {.cider_d = false});
  CHECK(plain > d);
}

TEST_CASE("meteor examples") {
  const auto same = single("a dog runs on grass", {"a dog runs on grass"});
  CHECK(meteor_simplified(same) == doctest::Approx(1.0 - 0.5 * std::pow(1.0 / 5, 3.0)).epsilon(1e-15));
  CHECK(meteor_simplified(single("a b", {"c d"})) == 0.0);

  const double p = 1.0, r = 0.75;
  const double fmean = p * r / (0.9 * p + 0.1 * r);
  const double expect = fmean * (1.0 - 0.5 * std::pow(1.0 / 3, 3.0));
  CHECK(meteor_simplified(single("the cat sat", {"the cat sat down"})) ==
        doctest::Approx(expect).epsilon(1e-15));

  // Swapped halves: all four words match in two chunks.
  auto a = align(words("c d a b"), words("a b c d"));
  CHECK(a.matches == 4);
  CHECK(a.chunks == 2);
  CHECK(crude_stem("running") == "runn");
  CHECK(crude_stem("dogs") == "dog");
  CHECK(crude_stem("is") == "is");
  CHECK(align(words("dogs run"), words("dog runs"), true).matches == 2);
  CHECK(align(words("dogs run"), words("dog runs"), false).matches == 0);
}

TEST_CASE("alignment matches exhaustive matching") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_sentence(rng, 1, 6, 3), r = random_sentence(rng, 1, 6, 3);
    const auto fast = align(c, r), slow = brute_align(c, r);
    CAPTURE(trial);
    CHECK(fast.matches == slow.matches);
    CHECK(fast.chunks == slow.chunks);
  }
}

TEST_CASE("metrics are permutation invariant and bounded") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto corpus = random_corpus(rng, 6, 6);
    auto shuffled = corpus;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (int n = 1; n <= 4; ++n) CHECK(bleu(corpus, n) == doctest::Approx(bleu(shuffled, n)).epsilon(1e-14));
    CHECK(rouge_l(corpus) == doctest::Approx(rouge_l(shuffled)).epsilon(1e-14));
    CHECK(cider(corpus) == doctest::Approx(cider(shuffled)).epsilon(1e-12));
    CHECK(meteor_simplified(corpus) == doctest::Approx(meteor_simplified(shuffled)).epsilon(1e-14));
    for (int n = 1; n <= 4; ++n) {
      CHECK(bleu(corpus, n) >= 0.0);
      CHECK(bleu(corpus, n) <= 1.0);
    }
    CHECK(rouge_l(corpus) >= 0.0);
    CHECK(rouge_l(corpus) <= 1.0);
    CHECK(meteor_simplified(corpus) >= 0.0);
    CHECK(meteor_simplified(corpus) <= 1.0);
    CHECK(cider(corpus) >= 0.0);
  }
}

TEST_CASE("candidates equal to a reference score exactly one") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto corpus = random_corpus(rng, 5, 6);
    for (auto& it : corpus) it.candidate = it.references.back();
    for (int n = 1; n <= 4; ++n) CHECK(bleu(corpus, n) == 1.0);
    CHECK(rouge_l(corpus) == 1.0);
  }
}

TEST_CASE("evaluation report keys and scale") {
  const auto r = evaluation_report(single("a b c d", {"a b c d"}));
  std::set<std::string> keys;
  for (const auto& [k, v] : r) keys.insert(k);
  CHECK(keys == std::set<std::string>{"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR", "ROUGE-L", "CIDEr"});
  CHECK(r.at("BLEU-4") == 100.0);
  CHECK(r.at("ROUGE-L") == 100.0);
}
