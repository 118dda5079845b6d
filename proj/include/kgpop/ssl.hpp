#pragma once
// Semi-supervised baselines: consistency training with token-replacement
// augmentation, iterative noised self-training, and generative augmentation
// with a greedy diversity filter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgpop/rng.hpp"
#include "kgpop/student.hpp"
#include "kgpop/teacher.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

struct SoftLabel {
  double p0 = 0.5;
  double p1 = 0.5;

  void validate() const {
    if (std::abs(p0 + p1 - 1.0) > 1e-9)
      throw std::invalid_argument("soft label must sum to 1");
  }
};

struct UdaConfig {
  double lambda = 1.0;       // consistency weight
  double ratio = 1.0;        // unsupervised examples per supervised batch slot
  double replace_prob = 0.1; // per-token replacement probability
  std::uint64_t seed = 0;
};

struct NoiseConfig {
  double dropout_p = 0.1;  // feature dropout during student training
  int iterations = 3;
  bool soft = false;
};

// Document frequencies over a token corpus; replacement tokens are sampled
// with weight proportional to inverse document frequency.
struct TokenFrequencies {
  std::vector<std::string> vocab;    // sorted, markers excluded
  std::vector<double> cumulative;    // cumulative idf weights
  std::size_t n_docs = 0;

  static TokenFrequencies build(const std::vector<Tokens>& corpus) {
    TokenFrequencies tf;
    tf.n_docs = corpus.size();
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& seq : corpus) {
      std::unordered_set<std::string> seen;
      for (const auto& tok : seq)
        if (!is_marker_token(tok) && seen.insert(tok).second) ++df[tok];
    }
    std::set<std::string> sorted;
    for (const auto& [tok, c] : df) sorted.insert(tok);
    double cum = 0.0;
    for (const auto& tok : sorted) {
      double idf = std::log(static_cast<double>(tf.n_docs + 1) /
                            static_cast<double>(df[tok] + 1)) + 1.0;
      cum += idf;
      tf.vocab.push_back(tok);
      tf.cumulative.push_back(cum);
    }
    return tf;
  }

  bool empty() const { return vocab.empty(); }

  const std::string& sample(Rng& rng) const {
    if (vocab.empty())
      throw std::invalid_argument("token frequencies cover an empty vocabulary");
    double u = rng.uniform() * cumulative.back();
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
    if (i >= vocab.size()) i = vocab.size() - 1;
    return vocab[i];
  }
};

inline Tokens augment_tokens(const Tokens& tokens, double replace_prob,
                             const TokenFrequencies& freqs, Rng& rng) {
  if (replace_prob < 0.0 || replace_prob > 1.0)
    throw std::invalid_argument("replace_prob outside [0,1]");
  if (freqs.empty())
    throw std::invalid_argument("augment_tokens: empty replacement vocabulary");
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (!is_marker_token(tok) && rng.bernoulli(replace_prob))
      out.push_back(freqs.sample(rng));
    else
      out.push_back(tok);
  }
  return out;
}

inline Tokens augment_tokens(const Tokens& tokens, double replace_prob,
                             const TokenFrequencies& freqs,
                             std::uint64_t seed) {
  Rng rng(derive_seed(seed, "augment_tokens"));
  return augment_tokens(tokens, replace_prob, freqs, rng);
}

// Consistency training: supervised cross-entropy plus
// lambda * CE(p_frozen(y|x) || p_theta(y|x_aug)) over unlabeled draws, with
// the frozen copy refreshed each step before the consistency term. With
// lambda = 0 or ratio = 0 this is bit-identical to plain supervised training.
inline StudentModel uda_train(const std::vector<LabeledExample>& labeled,
                              const std::vector<Triple>& unlabeled,
                              const UdaConfig& uda, const TrainConfig& hyper,
                              const FeatureConfig& fcfg = {},
                              std::vector<double>* consistency_log = nullptr) {
  if (labeled.empty()) throw std::invalid_argument("uda_train: empty labeled");
  if (uda.lambda < 0.0) throw std::invalid_argument("uda_train: negative lambda");
  if (uda.ratio < 0.0) throw std::invalid_argument("uda_train: negative ratio");
  if (uda.ratio > 0.0 && unlabeled.empty())
    throw std::invalid_argument("uda_train: ratio > 0 but unlabeled is empty");

  std::size_t per_batch = static_cast<std::size_t>(
      uda.ratio * static_cast<double>(hyper.batch_size));
  BatchHook hook;
  std::vector<Tokens> unlabeled_tokens;
  TokenFrequencies freqs;
  Rng draw_rng(derive_seed(uda.seed, "uda.draw"));
  Rng aug_rng(derive_seed(uda.seed, "uda.augment"));

  if (uda.lambda > 0.0 && per_batch > 0 && !unlabeled.empty()) {
    unlabeled_tokens.reserve(unlabeled.size());
    for (const auto& t : unlabeled)
      unlabeled_tokens.push_back(serialize_triple(t));
    std::vector<Tokens> corpus = unlabeled_tokens;
    for (const auto& ex : labeled)
      corpus.push_back(serialize_triple(ex.triple));
    freqs = TokenFrequencies::build(corpus);
    if (freqs.empty())
      throw std::invalid_argument("uda_train: empty augmentation vocabulary");

    hook = [&, per_batch](const StudentModel& current,
                          std::vector<double>& grad_w, double& grad_b) {
      double inv = uda.lambda / static_cast<double>(per_batch);
      double loss = 0.0;
      for (std::size_t s = 0; s < per_batch; ++s) {
        const Tokens& orig =
            unlabeled_tokens[draw_rng.below(unlabeled_tokens.size())];
        Tokens noised = augment_tokens(orig, uda.replace_prob, freqs, aug_rng);
        double q = current.predict_tokens(orig);  // frozen copy, this step
        FeatureVector phi = featurize(noised, current.features);
        double m_aug = current.margin(phi);
        loss += ce_loss(m_aug, q);
        double err = (sigmoid(m_aug) - q) * inv;
        for (const auto& [i, w] : phi.entries) grad_w[i] += err * w;
        grad_b += err;
      }
      if (consistency_log)
        consistency_log->push_back(loss / static_cast<double>(per_batch));
    };
  }
  return train_core(prepare_examples(labeled, fcfg), hyper, fcfg, nullptr, 0.0,
                    hook);
}

// Iterative self-training: round zero trains on the labeled set alone; each
// later round pseudo-labels the pool with the current model (hard labels at
// one half, or soft targets) and trains a fresh student on the union with
// feature dropout noise.
inline StudentModel noisy_student_iterate(
    const std::vector<LabeledExample>& labeled,
    const std::vector<Triple>& unlabeled, const NoiseConfig& noise,
    const TrainConfig& hyper, const FeatureConfig& fcfg = {}) {
  if (labeled.empty())
    throw std::invalid_argument("noisy_student: empty labeled");
  if (noise.dropout_p < 0.0 || noise.dropout_p >= 1.0)
    throw std::invalid_argument("noisy_student: dropout_p outside [0,1)");
  if (noise.iterations < 0)
    throw std::invalid_argument("noisy_student: negative iterations");

  StudentModel model = train_student(labeled, hyper, fcfg);
  if (noise.iterations == 0 || unlabeled.empty()) return model;

  std::vector<TrainExample> base = prepare_examples(labeled, fcfg);
  std::vector<FeatureVector> pool_phi;
  pool_phi.reserve(unlabeled.size());
  for (const auto& t : unlabeled) pool_phi.push_back(featurize(t, fcfg));

  for (int iter = 1; iter <= noise.iterations; ++iter) {
    std::vector<TrainExample> data = base;
    data.reserve(base.size() + pool_phi.size());
    for (const auto& phi : pool_phi) {
      double p = model.predict(phi);
      double target;
      if (noise.soft) {
        SoftLabel sl{1.0 - p, p};
        sl.validate();
        target = sl.p1;
      } else {
        target = p >= 0.5 ? 1.0 : 0.0;
      }
      data.push_back({phi, target});
    }
    model = train_core(data, hyper, fcfg, nullptr, noise.dropout_p, nullptr);
  }
  return model;
}

// Decode tails from the generative teacher for (head, relation) prompts.
// Duplicate tails per prompt are dropped; empty decodes are skipped.
inline std::vector<Triple> gdaug_generate(
    const NgramTeacher& teacher,
    const std::vector<std::pair<std::string, Relation>>& heads,
    int samples_per_head, int max_len, std::uint64_t seed,
    double temperature = 1.0) {
  if (samples_per_head < 0 || max_len < 1)
    throw std::invalid_argument("gdaug_generate: bad sampling bounds");
  Rng rng(derive_seed(seed, "gdaug"));
  std::vector<Triple> out;
  for (const auto& [head, rel] : heads) {
    Tokens prefix = tokenize(head);
    if (prefix.empty())
      throw std::invalid_argument("gdaug_generate: empty head");
    prefix.push_back(relation_marker(rel));
    std::set<std::string> seen_tails;
    for (int s = 0; s < samples_per_head; ++s) {
      Tokens ctx = prefix;
      Tokens tail;
      for (int step = 0; step < max_len; ++step) {
        std::string tok = teacher.sample_next(ctx, rng, temperature);
        if (tok == kEndMarker) break;
        tail.push_back(tok);
        ctx.push_back(tok);
      }
      if (tail.empty()) continue;
      std::string key = join_tokens(tail);
      if (seen_tails.insert(key).second)
        out.push_back({head, rel, key});
    }
  }
  return out;
}

// Greedy coverage selection: repeatedly take the candidate adding the most
// unseen uni/bi-grams, ties and zero gains resolved by input order.
inline std::vector<Triple> diversity_filter(
    const std::vector<Triple>& candidates, std::size_t budget) {
  std::size_t want = std::min(budget, candidates.size());
  std::vector<std::vector<std::string>> grams(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Tokens seq = serialize_triple(candidates[i]);
    for (std::size_t j = 0; j < seq.size(); ++j) {
      grams[i].push_back(seq[j]);
      if (j + 1 < seq.size()) grams[i].push_back(seq[j] + '\x1f' + seq[j + 1]);
    }
  }
  std::unordered_set<std::string> covered;
  std::vector<bool> taken(candidates.size(), false);
  std::vector<Triple> out;
  out.reserve(want);
  for (std::size_t round = 0; round < want; ++round) {
    std::size_t best = candidates.size();
    std::size_t best_gain = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      std::unordered_set<std::string> fresh;
      for (const auto& g : grams[i])
        if (!covered.count(g)) fresh.insert(g);
      if (best == candidates.size() || fresh.size() > best_gain) {
        best = i;
        best_gain = fresh.size();
      }
    }
    taken[best] = true;
    for (const auto& g : grams[best]) covered.insert(g);
    out.push_back(candidates[best]);
  }
  return out;
}

}  // namespace kgpop
