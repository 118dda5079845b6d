#pragma once
// Labeled/unlabeled triple datasets, negative sampling and split handling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgpop/rng.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

inline const std::vector<std::string>& eval_split_names() {
  static const std::vector<std::string> names = {
      "original_test", "cskb_head_aser_tail", "aser_edges"};
  return names;
}

struct DatasetBundle {
  std::vector<Triple> labeled_pos;
  std::vector<LabeledExample> labeled_neg;  // all label 0
  std::vector<Triple> unlabeled;
  std::map<std::string, std::vector<LabeledExample>> eval_splits;

  std::vector<LabeledExample> labeled() const {
    std::vector<LabeledExample> out;
    out.reserve(labeled_pos.size() + labeled_neg.size());
    for (const auto& t : labeled_pos) out.push_back({t, 1});
    out.insert(out.end(), labeled_neg.begin(), labeled_neg.end());
    return out;
  }

  // Distinct heads across the labeled part, canonical token form.
  std::set<std::string> labeled_heads() const {
    std::set<std::string> out;
    for (const auto& t : labeled_pos) out.insert(join_tokens(tokenize(t.head)));
    for (const auto& ex : labeled_neg)
      out.insert(join_tokens(tokenize(ex.triple.head)));
    return out;
  }

  std::set<std::string> labeled_tails() const {
    std::set<std::string> out;
    for (const auto& t : labeled_pos) out.insert(join_tokens(tokenize(t.tail)));
    for (const auto& ex : labeled_neg)
      out.insert(join_tokens(tokenize(ex.triple.tail)));
    return out;
  }

  void validate() const {
    std::unordered_set<std::string> pos_keys;
    for (const auto& t : labeled_pos) {
      validate_triple(t);
      pos_keys.insert(triple_key(t));
    }
    for (const auto& ex : labeled_neg) {
      validate_triple(ex.triple);
      if (ex.label != 0)
        throw std::invalid_argument("labeled_neg contains a non-zero label");
      if (pos_keys.count(triple_key(ex.triple)))
        throw std::invalid_argument(
            "negative example duplicates a positive triple: " +
            triple_key(ex.triple));
    }
    for (const auto& t : unlabeled) validate_triple(t);
    for (const auto& [name, split] : eval_splits) {
      const auto& names = eval_split_names();
      if (std::find(names.begin(), names.end(), name) == names.end())
        throw std::invalid_argument("unknown eval split name: " + name);
      for (const auto& ex : split) {
        validate_triple(ex.triple);
        if (ex.label != 0 && ex.label != 1)
          throw std::invalid_argument("eval label outside {0,1}");
      }
    }
  }
};

// Corrupt tails within the same relation's tail vocabulary, rejecting any
// corruption that collides with a known positive. Deterministic given seed.
// Relations whose tail vocabulary has fewer than two distinct tails are
// skipped; their names are appended to `skipped` when provided.
inline std::vector<LabeledExample> sample_negatives(
    const std::vector<Triple>& pos, double ratio, std::uint64_t seed,
    std::vector<std::string>* skipped = nullptr) {
  if (pos.empty()) throw std::invalid_argument("sample_negatives: empty pos");
  if (ratio <= 0.0)
    throw std::invalid_argument("sample_negatives: ratio must be positive");

  std::unordered_set<std::string> pos_keys;
  std::map<Relation, std::set<std::string>> tail_sets;
  for (const auto& t : pos) {
    pos_keys.insert(triple_key(t));
    tail_sets[t.relation].insert(join_tokens(tokenize(t.tail)));
  }
  std::map<Relation, std::vector<std::string>> tail_vocab;
  for (const auto& [r, tails] : tail_sets) {
    if (tails.size() < 2) {
      if (skipped) skipped->push_back(std::string(relation_name(r)));
      continue;
    }
    tail_vocab[r] = {tails.begin(), tails.end()};
  }

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (tail_vocab.count(pos[i].relation)) eligible.push_back(i);

  std::size_t want = static_cast<std::size_t>(
      ratio * static_cast<double>(pos.size()));
  std::vector<LabeledExample> out;
  out.reserve(want);
  if (want == 0) return out;
  if (eligible.empty())
    throw std::runtime_error(
        "sample_negatives: exhausted (no relation has >= 2 distinct tails)");

  Rng rng(derive_seed(seed, "sample_negatives"));
  std::size_t attempts = 0;
  const std::size_t max_attempts = 100 * pos.size();
  while (out.size() < want) {
    if (attempts++ >= max_attempts)
      throw std::runtime_error(
          "sample_negatives: exhausted rejection attempts");
    const Triple& src = pos[eligible[rng.below(eligible.size())]];
    const auto& vocab = tail_vocab.at(src.relation);
    Triple corrupted{src.head, src.relation, vocab[rng.below(vocab.size())]};
    if (pos_keys.count(triple_key(corrupted))) continue;
    out.push_back({corrupted, 0});
  }
  return out;
}

// Head-grouped random partition: every example sharing a head lands in the
// same split. Greedy largest-deficit assignment over shuffled head groups.
inline std::array<std::vector<LabeledExample>, 3> split_dataset(
    const std::vector<LabeledExample>& labeled,
    const std::array<double, 3>& fractions, std::uint64_t seed) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions)
    if (f <= 0.0)
      throw std::invalid_argument("split_dataset: fractions must be positive");
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  if (labeled.empty())
    throw std::invalid_argument("split_dataset: empty input");

  // Head groups in first-appearance order, then shuffled.
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    std::string head = join_tokens(tokenize(labeled[i].triple.head));
    auto [it, fresh] = group_of.try_emplace(head, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split_dataset"));
  rng.shuffle(order);

  std::array<std::vector<LabeledExample>, 3> out;
  std::array<double, 3> target{};
  std::array<std::size_t, 3> have{};
  double n = static_cast<double>(labeled.size());
  for (int s = 0; s < 3; ++s) target[s] = fractions[s] * n;

  for (std::size_t gi : order) {
    int best = 0;
    double best_deficit = target[0] - static_cast<double>(have[0]);
    for (int s = 1; s < 3; ++s) {
      double deficit = target[s] - static_cast<double>(have[s]);
      if (deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    for (std::size_t i : groups[gi]) out[best].push_back(labeled[i]);
    have[best] += groups[gi].size();
  }
  for (int s = 0; s < 3; ++s)
    if (out[s].empty())
      throw std::invalid_argument("split_dataset: a split would be empty");
  return out;
}

}  // namespace kgpop
