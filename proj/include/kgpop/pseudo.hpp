#pragma once
// Banded thresholding of teacher scores into pseudo labels, and per-relation
// down-sampling against target counts.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgpop/relations.hpp"
#include "kgpop/rng.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

// Four plausibility thresholds; scores inside [neg_min, neg_max] mint label 0,
// inside [pos_min, pos_max] mint label 1, everything else is discarded as
// over-implausible or over-plausible.
struct ThresholdBands {
  double neg_min;
  double neg_max;
  double pos_min;
  double pos_max;

  ThresholdBands(double nmin, double nmax, double pmin, double pmax)
      : neg_min(nmin), neg_max(nmax), pos_min(pmin), pos_max(pmax) {
    if (!(neg_min < neg_max && neg_max < pos_min && pos_min < pos_max))
      throw std::invalid_argument(
          "threshold bands must satisfy neg_min < neg_max < pos_min < pos_max");
  }
};

struct PseudoExample {
  Triple triple;
  int pseudo_label = 0;
  double teacher_score = 0.0;
  std::string provenance = "teacher";
};

struct ScoredTriple {
  Triple triple;
  double score = 0.0;
};

inline std::vector<PseudoExample> assign_pseudo_labels(
    const std::vector<ScoredTriple>& scored, const ThresholdBands& bands,
    const std::string& provenance = "teacher") {
  std::vector<PseudoExample> out;
  for (const auto& st : scored) {
    if (st.score >= bands.neg_min && st.score <= bands.neg_max)
      out.push_back({st.triple, 0, st.score, provenance});
    else if (st.score >= bands.pos_min && st.score <= bands.pos_max)
      out.push_back({st.triple, 1, st.score, provenance});
  }
  return out;
}

// Band endpoints chosen as empirical quantiles of the score distribution.
// Quantile q maps to the interpolated order statistic.
inline double score_quantile(std::vector<double> scores, double q) {
  if (scores.empty()) throw std::invalid_argument("quantile of empty scores");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile outside [0,1]");
  std::sort(scores.begin(), scores.end());
  double pos = q * static_cast<double>(scores.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, scores.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return scores[lo] * (1.0 - frac) + scores[hi] * frac;
}

inline ThresholdBands quantile_bands(const std::vector<double>& scores,
                                     double q_neg_min, double q_neg_max,
                                     double q_pos_min, double q_pos_max) {
  return ThresholdBands(
      score_quantile(scores, q_neg_min), score_quantile(scores, q_neg_max),
      score_quantile(scores, q_pos_min), score_quantile(scores, q_pos_max));
}

// Uniform down-sample per relation to min(target, supply), keeping relative
// order. A relation absent from target_counts has target 0: its examples are
// dropped, mirroring "as many pseudo examples as original ones".
inline std::vector<PseudoExample> balance_per_relation(
    const std::vector<PseudoExample>& pseudo,
    const std::map<Relation, std::size_t>& target_counts, std::uint64_t seed) {
  std::map<Relation, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < pseudo.size(); ++i)
    by_relation[pseudo[i].triple.relation].push_back(i);

  std::vector<bool> keep(pseudo.size(), true);
  for (const auto& [rel, indices] : by_relation) {
    auto it = target_counts.find(rel);
    std::size_t target = it == target_counts.end() ? 0 : it->second;
    if (indices.size() <= target) continue;
    Rng rng(derive_seed(seed, "balance." +
                                  std::string(relation_name(rel))));
    std::vector<std::size_t> chosen =
        rng.sample_indices(indices.size(), target);
    std::vector<bool> sel(indices.size(), false);
    for (std::size_t c : chosen) sel[c] = true;
    for (std::size_t j = 0; j < indices.size(); ++j)
      if (!sel[j]) keep[indices[j]] = false;
  }
  std::vector<PseudoExample> out;
  out.reserve(pseudo.size());
  for (std::size_t i = 0; i < pseudo.size(); ++i)
    if (keep[i]) out.push_back(pseudo[i]);
  return out;
}

// Per-(relation, label) labeled counts; the balancing targets of the pipeline.
inline std::map<Relation, std::size_t> relation_counts(
    const std::vector<LabeledExample>& data, int label) {
  std::map<Relation, std::size_t> out;
  for (const auto& ex : data)
    if (ex.label == label) ++out[ex.triple.relation];
  return out;
}

inline LabeledExample to_labeled(const PseudoExample& p) {
  return {p.triple, p.pseudo_label};
}

inline std::vector<LabeledExample> to_labeled(
    const std::vector<PseudoExample>& pseudo) {
  std::vector<LabeledExample> out;
  out.reserve(pseudo.size());
  for (const auto& p : pseudo) out.push_back(to_labeled(p));
  return out;
}

}  // namespace kgpop
