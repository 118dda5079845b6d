#pragma once
// Generative teacher: an add-k smoothed n-gram language model over serialized
// triples. Plausibility of a triple is its mean per-token log-likelihood,
// including the end-of-sequence prediction; higher means more plausible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgpop/rng.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

inline constexpr const char* kStartMarker = "<s>";
inline constexpr const char* kEndMarker = "</s>";
inline constexpr const char* kUnkMarker = "<unk>";

class NgramTeacher {
 public:
  NgramTeacher() = default;
  NgramTeacher(int order, double smoothing_k)
      : order_(order), k_(smoothing_k) {
    if (order < 1) throw std::invalid_argument("teacher order must be >= 1");
    if (smoothing_k <= 0.0)
      throw std::invalid_argument("smoothing k must be positive");
    vocab_.insert(kEndMarker);
    vocab_.insert(kUnkMarker);
  }

  int order() const { return order_; }
  double smoothing_k() const { return k_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  void add_sequence(const Tokens& seq) {
    if (seq.empty()) return;
    for (const auto& t : seq) vocab_.insert(t);
    Tokens padded = pad(seq);
    for (std::size_t i = static_cast<std::size_t>(order_) - 1;
         i < padded.size(); ++i) {
      std::string ctx = context_key(padded, i);
      auto& cell = counts_[ctx];
      cell.total += 1;
      cell.next[padded[i]] += 1;
    }
  }

  // Mean log-probability of the sequence, end marker included. This equals
  // the negated mean per-token negative log-likelihood.
  double score_sequence(const Tokens& seq) const {
    if (seq.empty()) throw std::invalid_argument("cannot score empty sequence");
    Tokens padded = pad(map_unknown(seq));
    double lp = 0.0;
    std::size_t n = 0;
    for (std::size_t i = static_cast<std::size_t>(order_) - 1;
         i < padded.size(); ++i) {
      lp += std::log(conditional(context_key(padded, i), padded[i]));
      ++n;
    }
    return lp / static_cast<double>(n);
  }

  double score(const Triple& t) const {
    return score_sequence(serialize_triple(t));
  }

  // P(token | context tokens), add-k smoothed. Unknown tokens map to <unk>.
  double conditional(const std::string& ctx, const std::string& token) const {
    const std::string& tok = vocab_.count(token) ? token : kUnkMarker;
    double v = static_cast<double>(vocab_.size());
    auto it = counts_.find(ctx);
    if (it == counts_.end()) return 1.0 / v;
    const Cell& cell = it->second;
    auto jt = cell.next.find(tok);
    double c = jt == cell.next.end() ? 0.0 : static_cast<double>(jt->second);
    return (c + k_) / (static_cast<double>(cell.total) + k_ * v);
  }

  // Tokens in sorted order, boundary and unknown markers included.
  std::vector<std::string> vocabulary() const {
    return {vocab_.begin(), vocab_.end()};
  }

  // Sample the next token given trailing context. Support excludes the
  // unknown token and any relation marker; the end marker signals stop.
  // temperature 0 picks the argmax (first in sorted order on ties).
  std::string sample_next(const Tokens& trailing_context, Rng& rng,
                          double temperature) const {
    std::string ctx = trailing_key(trailing_context);
    std::vector<const std::string*> support;
    std::vector<double> probs;
    support.reserve(vocab_.size());
    for (const auto& tok : vocab_) {
      if (tok == kUnkMarker || is_marker_token(tok)) continue;
      support.push_back(&tok);
      probs.push_back(conditional(ctx, tok));
    }
    if (support.empty()) throw std::runtime_error("empty decode support");
    if (temperature <= 0.0) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
      return *support[best];
    }
    double z = 0.0;
    for (double& p : probs) {
      p = std::pow(p, 1.0 / temperature);
      z += p;
    }
    double u = rng.uniform() * z;
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return *support[i];
    }
    return *support.back();
  }

  // Contexts observed during training, with their successor counts.
  // Deterministically ordered for serialization and audits.
  std::vector<std::tuple<std::string, std::string, std::int64_t>>
  sorted_counts() const {
    std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
    for (const auto& [ctx, cell] : counts_)
      for (const auto& [tok, c] : cell.next) rows.emplace_back(ctx, tok, c);
    std::sort(rows.begin(), rows.end());
    return rows;
  }

  std::vector<std::string> observed_contexts() const {
    std::vector<std::string> ctxs;
    ctxs.reserve(counts_.size());
    for (const auto& [ctx, cell] : counts_) ctxs.push_back(ctx);
    std::sort(ctxs.begin(), ctxs.end());
    return ctxs;
  }

  void add_count(const std::string& ctx, const std::string& tok,
                 std::int64_t c) {
    if (tok != kEndMarker) vocab_.insert(tok);
    auto& cell = counts_[ctx];
    cell.total += c;
    cell.next[tok] += c;
  }

  void add_vocab(const std::string& tok) { vocab_.insert(tok); }

  // Context key for the last (order-1) tokens of an arbitrary prefix,
  // start-padded when shorter. Used by decoding.
  std::string trailing_key(const Tokens& prefix) const {
    Tokens ctx;
    int need = order_ - 1;
    for (int i = 0; i < need; ++i) {
      int idx = static_cast<int>(prefix.size()) - need + i;
      if (idx < 0)
        ctx.push_back(kStartMarker);
      else
        ctx.push_back(vocab_.count(prefix[idx]) ? prefix[idx] : kUnkMarker);
    }
    return join_tokens(ctx);
  }

 private:
  struct Cell {
    std::int64_t total = 0;
    std::unordered_map<std::string, std::int64_t> next;
  };

  Tokens pad(const Tokens& seq) const {
    Tokens padded;
    padded.reserve(seq.size() + order_);
    for (int i = 0; i < order_ - 1; ++i) padded.push_back(kStartMarker);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.push_back(kEndMarker);
    return padded;
  }

  Tokens map_unknown(const Tokens& seq) const {
    Tokens out;
    out.reserve(seq.size());
    for (const auto& t : seq)
      out.push_back(vocab_.count(t) ? t : kUnkMarker);
    return out;
  }

  std::string context_key(const Tokens& padded, std::size_t pos) const {
    Tokens ctx(padded.begin() + (pos - (order_ - 1)), padded.begin() + pos);
    return join_tokens(ctx);
  }

  int order_ = 2;
  double k_ = 0.1;
  std::set<std::string> vocab_;  // excludes the start marker
  std::unordered_map<std::string, Cell> counts_;
};

inline NgramTeacher train_teacher_on_sequences(
    const std::vector<Tokens>& corpus, int order, double smoothing_k) {
  if (corpus.empty())
    throw std::invalid_argument("train_teacher: empty corpus");
  NgramTeacher model(order, smoothing_k);
  for (const auto& seq : corpus) model.add_sequence(seq);
  return model;
}

// Train on the positive part of the labeled data.
inline NgramTeacher train_teacher(const std::vector<Triple>& positives,
                                  int order, double smoothing_k) {
  if (positives.empty())
    throw std::invalid_argument("train_teacher: empty corpus");
  std::vector<Tokens> corpus;
  corpus.reserve(positives.size());
  for (const auto& t : positives) corpus.push_back(serialize_triple(t));
  return train_teacher_on_sequences(corpus, order, smoothing_k);
}

inline double teacher_score(const NgramTeacher& model, const Triple& t) {
  return model.score(t);
}

}  // namespace kgpop
