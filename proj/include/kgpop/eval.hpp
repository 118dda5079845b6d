#pragma once
// Ranking and text-quality metrics: AUC with midrank tie handling, per-split
// evaluation reports, n-gram diversity proportion, corpus BLEU-2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgpop/triple.hpp"

namespace kgpop {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;
};

// Probability that a random positive outscores a random negative, ties at
// half credit: the normalized Mann-Whitney U via a rank sum with midranks.
inline double auc(const std::vector<ScoredLabel>& scored) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scored) (s.label ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: degenerate input, one class is absent");

  std::vector<std::size_t> order(scored.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           scored[order[j]].score == scored[order[i]].score)
      ++j;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (scored[order[k]].label) rank_sum_pos += midrank;
    i = j;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct EvalReport {
  double auc_all = 0.0;
  std::map<std::string, double> auc_per_split;
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> degenerate;  // splits skipped for missing a class
};

using TripleScorer = std::function<double(const Triple&)>;

// Scores every example once; per-split AUC plus the AUC over the pooled union.
inline EvalReport evaluate_splits(
    const TripleScorer& scorer,
    const std::map<std::string, std::vector<LabeledExample>>& eval_splits) {
  EvalReport report;
  std::vector<ScoredLabel> all;
  for (const auto& [name, split] : eval_splits) {
    std::vector<ScoredLabel> scored;
    scored.reserve(split.size());
    for (const auto& ex : split)
      scored.push_back({scorer(ex.triple), ex.label});
    all.insert(all.end(), scored.begin(), scored.end());
    report.counts[name] = split.size();
    try {
      report.auc_per_split[name] = auc(scored);
    } catch (const std::invalid_argument&) {
      report.degenerate.push_back(name);
    }
  }
  report.auc_all = auc(all);
  return report;
}

// Proportion of distinct n-grams among all n-gram occurrences; n-grams are
// taken within each sequence.
inline double ngram_diversity(const std::vector<Tokens>& corpus, int n) {
  if (n < 1) throw std::invalid_argument("ngram_diversity: n must be >= 1");
  std::unordered_set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& seq : corpus) {
    if (seq.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
      std::string gram;
      for (int k = 0; k < n; ++k) {
        if (k) gram.push_back('\x1f');
        gram += seq[i + k];
      }
      distinct.insert(gram);
      ++total;
    }
  }
  if (total == 0)
    throw std::invalid_argument(
        "ngram_diversity: empty, no sequence has length >= n");
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

namespace detail {
inline std::unordered_map<std::string, std::size_t> gram_counts(
    const Tokens& seq, int n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (seq.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::string gram;
    for (int k = 0; k < n; ++k) {
      if (k) gram.push_back('\x1f');
      gram += seq[i + k];
    }
    ++counts[gram];
  }
  return counts;
}
}  // namespace detail

// Corpus-level BLEU with uniform weights over modified uni- and bi-gram
// precision and the usual brevity penalty. No smoothing: a zero precision
// zeroes the score.
inline double bleu2(const std::vector<Tokens>& hypotheses,
                    const std::vector<Tokens>& references) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("bleu2: length mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("bleu2: empty corpus");

  std::size_t hyp_len = 0, ref_len = 0;
  std::array<std::size_t, 2> matched{0, 0}, total{0, 0};
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += hypotheses[i].size();
    ref_len += references[i].size();
    for (int n = 1; n <= 2; ++n) {
      auto hyp_grams = detail::gram_counts(hypotheses[i], n);
      auto ref_grams = detail::gram_counts(references[i], n);
      for (const auto& [gram, c] : hyp_grams) {
        total[n - 1] += c;
        auto it = ref_grams.find(gram);
        if (it != ref_grams.end()) matched[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (total[0] == 0 || total[1] == 0)
    throw std::invalid_argument("bleu2: hypotheses too short for bigrams");
  double p1 = static_cast<double>(matched[0]) / static_cast<double>(total[0]);
  double p2 = static_cast<double>(matched[1]) / static_cast<double>(total[1]);
  if (p1 == 0.0 || p2 == 0.0) return 0.0;
  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) /
                                       static_cast<double>(hyp_len));
  return bp * std::exp(0.5 * std::log(p1) + 0.5 * std::log(p2));
}

}  // namespace kgpop
