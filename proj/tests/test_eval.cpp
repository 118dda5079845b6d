#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kgpop/eval.hpp"
#include "kgpop/rng.hpp"

using namespace kgpop;
using Catch::Approx;

// Independent O(n^2) oracle: count pairwise wins, half credit for ties.
static double pairwise_auc(const std::vector<ScoredLabel>& scored) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : scored) {
    if (!p.label) continue;
    for (const auto& n : scored) {
      if (n.label) continue;
      ++pairs;
      if (p.score > n.score)
        wins += 1.0;
      else if (p.score == n.score)
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

TEST_CASE("auc on hand-built inputs") {
  REQUIRE(auc({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}}) == 1.0);
  REQUIRE(auc({{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}}) == 0.5);
  // positives {0.8, 0.3}, negatives {0.5, 0.1}: 3 wins of 4 pairs
  REQUIRE(auc({{0.8, 1}, {0.3, 1}, {0.5, 0}, {0.1, 0}}) == Approx(0.75));
}

TEST_CASE("auc requires both classes") {
  REQUIRE_THROWS_WITH(auc({{0.5, 1}, {0.7, 1}}),
                      Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("rank-sum auc equals the pairwise oracle with ties") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 2 + rng.below(999);
    std::vector<ScoredLabel> scored;
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid injects plenty of ties
      double score = static_cast<double>(rng.below(20)) / 10.0;
      int label = static_cast<int>(rng.below(2));
      (label ? pos : neg) = true;
      scored.push_back({score, label});
    }
    if (!pos || !neg) continue;
    REQUIRE(auc(scored) == Approx(pairwise_auc(scored)).margin(1e-12));
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(33);
  std::vector<ScoredLabel> scored;
  for (int i = 0; i < 200; ++i)
    scored.push_back({rng.uniform() * 4.0 - 2.0,
                      static_cast<int>(rng.below(2))});
  double base = auc(scored);
  auto mapped = scored;
  for (auto& s : mapped) s.score = std::exp(0.5 * s.score) + 3.0;
  REQUIRE(auc(mapped) == Approx(base).margin(1e-12));
  for (auto& s : mapped) s.score = std::atan(s.score);
  REQUIRE(auc(mapped) == Approx(base).margin(1e-12));
}

TEST_CASE("negating tie-free scores complements the auc") {
  Rng rng(35);
  std::vector<ScoredLabel> scored;
  for (int i = 0; i < 300; ++i)
    scored.push_back({rng.uniform(), static_cast<int>(rng.below(2))});
  double base = auc(scored);
  for (auto& s : scored) s.score = -s.score;
  REQUIRE(auc(scored) == Approx(1.0 - base).margin(1e-12));
}

TEST_CASE("evaluate_splits pools the union and reports per split") {
  std::map<std::string, std::vector<LabeledExample>> splits;
  splits["original_test"] = {{{"a", Relation::xWant, "t1"}, 1},
                             {{"b", Relation::xWant, "t2"}, 0}};
  splits["aser_edges"] = {{{"c", Relation::xWant, "t3"}, 1},
                          {{"d", Relation::xWant, "t4"}, 0}};
  // score by tail id: t1=4, t2=1, t3=2, t4=3
  auto scorer = [](const Triple& t) {
    if (t.tail == "t1") return 4.0;
    if (t.tail == "t2") return 1.0;
    if (t.tail == "t3") return 2.0;
    return 3.0;
  };
  EvalReport report = evaluate_splits(scorer, splits);
  REQUIRE(report.auc_per_split.at("original_test") == 1.0);
  REQUIRE(report.auc_per_split.at("aser_edges") == 0.0);
  // pooled pairs: pos {4, 2} vs neg {1, 3}: wins 4>1, 4>3, 2>1 = 3 of 4
  REQUIRE(report.auc_all == Approx(0.75));
  REQUIRE(report.counts.at("original_test") == 2);
  REQUIRE(report.degenerate.empty());
}

TEST_CASE("evaluate_splits flags degenerate splits and keeps going") {
  std::map<std::string, std::vector<LabeledExample>> splits;
  splits["original_test"] = {{{"a", Relation::xWant, "t1"}, 1},
                             {{"b", Relation::xWant, "t2"}, 0}};
  splits["aser_edges"] = {{{"c", Relation::xWant, "t3"}, 1}};
  auto scorer = [](const Triple& t) { return t.tail == "t1" ? 1.0 : 0.0; };
  EvalReport report = evaluate_splits(scorer, splits);
  REQUIRE(report.auc_per_split.count("aser_edges") == 0);
  REQUIRE(report.degenerate == std::vector<std::string>{"aser_edges"});
  REQUIRE(report.auc_per_split.at("original_test") == 1.0);
}

TEST_CASE("ngram diversity hand values") {
  REQUIRE(ngram_diversity({{"a", "b", "a", "b"}}, 1) == Approx(0.5));
  REQUIRE(ngram_diversity({{"a", "b"}, {"c", "d"}}, 1) == 1.0);
  // bigrams of {[a b a], [a b]}: ab, ba, ab -> 2 distinct of 3
  REQUIRE(ngram_diversity({{"a", "b", "a"}, {"a", "b"}}, 2) ==
          Approx(2.0 / 3.0));
}

TEST_CASE("ngram diversity errors when no sequence is long enough") {
  REQUIRE_THROWS_WITH(ngram_diversity({{"a"}}, 2),
                      Catch::Matchers::ContainsSubstring("empty"));
}

TEST_CASE("duplicating the corpus halves unigram diversity") {
  std::vector<Tokens> corpus = {{"a", "b", "c"}, {"c", "d"}};
  double base = ngram_diversity(corpus, 1);
  std::vector<Tokens> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  REQUIRE(ngram_diversity(doubled, 1) == Approx(base / 2.0));
}

TEST_CASE("bleu2 hand values") {
  REQUIRE(bleu2({{"a", "b", "c"}}, {{"a", "b", "c"}}) == Approx(1.0));
  REQUIRE(bleu2({{"x", "y", "z"}}, {{"a", "b", "c"}}) == 0.0);
  // p1 = 2/4, p2 = 1/3, BP = 1
  REQUIRE(bleu2({{"a", "b", "c", "d"}}, {{"a", "b", "x", "y"}}) ==
          Approx(std::exp(0.5 * std::log(0.5) + 0.5 * std::log(1.0 / 3.0)))
              .epsilon(1e-12));
}

TEST_CASE("bleu2 brevity penalty bites short hypotheses") {
  // hypothesis matches a prefix of the reference: precisions are perfect
  // but the 2:4 length ratio costs exp(1 - 2) = e^-1.
  REQUIRE(bleu2({{"a", "b"}}, {{"a", "b", "c", "d"}}) ==
          Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("bleu2 validates input shapes") {
  REQUIRE_THROWS_AS(bleu2({{"a"}}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(bleu2({}, {}), std::invalid_argument);
}
