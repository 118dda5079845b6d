#pragma once
// Synthetic benchmark generator. A planted rule set decides which triples are
// plausible: every relation admits tails that carry a positive-polarity tag
// token. The labeled part uses one token domain, the unlabeled pool another;
// pool tails carry both the labeled-domain tag (visible to a teacher trained
// on labeled positives) and a pool-domain co-tag (learnable only from pseudo
// labels). Out-of-domain evaluation tails carry only the pool-domain tag, so
// a purely supervised student has nothing to rank them by.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgpop/dataset.hpp"
#include "kgpop/rng.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

struct ImplicationRule {
  std::string head_pattern;          // token required in the head; "" = any
  std::optional<Relation> relation;  // nullopt = any relation
  std::vector<std::string> plausible_tags;  // tag tokens whose tails satisfy
};

struct SyntheticSpec {
  std::size_t n_entities = 300;        // labeled-domain head entities
  std::size_t n_pool_entities = 3000;  // pool-domain head entities
  std::size_t n_fillers = 80;          // labeled-domain filler vocabulary
  std::size_t n_pool_fillers = 800;
  std::size_t n_tag_classes = 8;       // half plausible, half implausible
  std::vector<Relation> relations;     // empty = first six relations
  double noise_rate = 0.1;             // label flip probability
  std::size_t n_labeled = 2000;
  std::size_t n_unlabeled = 50000;
  std::size_t n_eval_per_split = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (noise_rate < 0.0 || noise_rate >= 0.5)
      throw std::invalid_argument("synthetic: noise rate must be in [0, 0.5)");
    if (n_tag_classes < 2 || n_tag_classes % 2 != 0)
      throw std::invalid_argument(
          "synthetic: tag class count must be even and >= 2");
    if (n_entities < 2 || n_pool_entities < 2 || n_fillers < 2 ||
        n_pool_fillers < 2)
      throw std::invalid_argument("synthetic: vocabulary too small");
    if (n_labeled < 4 || n_eval_per_split < 2)
      throw std::invalid_argument("synthetic: dataset sizes too small");
  }

  std::vector<Relation> relation_set() const {
    if (!relations.empty()) return relations;
    auto all = all_relations();
    return {all.begin(), all.begin() + 6};
  }
};

// The generated bundle together with the planted ground truth.
struct SyntheticWorld {
  DatasetBundle bundle;
  std::vector<ImplicationRule> rules;
  std::unordered_map<std::string, int> tag_polarity;  // tag token -> 0/1

  // Rule oracle: a triple is plausible iff its tail carries a positive tag.
  bool plausible(const Triple& t) const {
    for (const auto& tok : tokenize(t.tail)) {
      auto it = tag_polarity.find(tok);
      if (it != tag_polarity.end()) return it->second == 1;
    }
    return false;
  }
};

namespace detail {

class SyntheticBuilder {
 public:
  explicit SyntheticBuilder(const SyntheticSpec& spec) : spec_(spec) {
    spec.validate();
    relations_ = spec.relation_set();
    half_ = spec.n_tag_classes / 2;
  }

  SyntheticWorld build() {
    SyntheticWorld world;
    for (std::size_t c = 0; c < spec_.n_tag_classes; ++c) {
      int polarity = c < half_ ? 1 : 0;
      world.tag_polarity[labeled_tag(c)] = polarity;
      world.tag_polarity[pool_tag(c)] = polarity;
    }
    for (Relation r : relations_) {
      ImplicationRule rule;
      rule.relation = r;
      for (std::size_t c = 0; c < half_; ++c) {
        rule.plausible_tags.push_back(labeled_tag(c));
        rule.plausible_tags.push_back(pool_tag(c));
      }
      world.rules.push_back(std::move(rule));
    }
    build_labeled(world);
    build_pool(world);
    build_eval(world);
    world.bundle.validate();
    return world;
  }

 private:
  std::string labeled_tag(std::size_t c) const {
    return "tl" + std::to_string(c);
  }
  std::string pool_tag(std::size_t c) const { return "tu" + std::to_string(c); }

  Relation pick_relation(Rng& rng) const {
    return relations_[rng.below(relations_.size())];
  }

  // Tag class conditioned on the desired planted label.
  std::size_t pick_class(Rng& rng, int label) const {
    std::size_t offset = label == 1 ? 0 : half_;
    return offset + rng.below(half_);
  }

  std::string labeled_head(Rng& rng, const char* entity_prefix,
                           std::size_t n_entities) const {
    return std::string(entity_prefix) + std::to_string(rng.below(n_entities)) +
           " fl" + std::to_string(rng.below(spec_.n_fillers));
  }

  std::string pool_head(Rng& rng) const {
    return "eu" + std::to_string(rng.below(spec_.n_pool_entities)) + " fu" +
           std::to_string(rng.below(spec_.n_pool_fillers));
  }

  Triple labeled_style_triple(Rng& rng, int label, const char* entity_prefix,
                              std::size_t n_entities) const {
    std::size_t c = pick_class(rng, label);
    std::string tail =
        labeled_tag(c) + " fl" + std::to_string(rng.below(spec_.n_fillers));
    return {labeled_head(rng, entity_prefix, n_entities), pick_relation(rng),
            tail};
  }

  Triple pool_style_triple(Rng& rng, int label) const {
    std::size_t c = pick_class(rng, label);
    std::string tail = labeled_tag(c) + " " + pool_tag(c) + " fu" +
                       std::to_string(rng.below(spec_.n_pool_fillers));
    return {pool_head(rng), pick_relation(rng), tail};
  }

  // Out-of-domain tail: pool-domain tag and filler only.
  Triple ood_tail_triple(Rng& rng, int label, std::string head) const {
    std::size_t c = pick_class(rng, label);
    std::string tail = pool_tag(c) + " fu" +
                       std::to_string(rng.below(spec_.n_pool_fillers));
    return {std::move(head), pick_relation(rng), tail};
  }

  template <class Gen>
  std::vector<Triple> draw_unique(Rng& rng, std::size_t count, Gen gen) {
    std::vector<Triple> out;
    out.reserve(count);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 50 * count + 1000;
    while (out.size() < count) {
      if (attempts++ >= max_attempts)
        throw std::invalid_argument(
            "synthetic: sizes exceed combinatorial capacity");
      Triple t = gen(rng);
      if (used_.insert(triple_key(t)).second) out.push_back(std::move(t));
    }
    return out;
  }

  void add_labeled(SyntheticWorld& world, Rng& rng,
                   const std::vector<Triple>& content, int planted) {
    for (const auto& t : content) {
      int label = planted;
      if (rng.bernoulli(spec_.noise_rate)) label = 1 - label;
      if (label == 1)
        world.bundle.labeled_pos.push_back(t);
      else
        world.bundle.labeled_neg.push_back({t, 0});
    }
  }

  void build_labeled(SyntheticWorld& world) {
    Rng rng(derive_seed(spec_.seed, "synth.labeled"));
    std::size_t n_pos = spec_.n_labeled / 2;
    std::size_t n_neg = spec_.n_labeled - n_pos;
    auto pos_content = draw_unique(rng, n_pos, [this](Rng& r) {
      return labeled_style_triple(r, 1, "el", spec_.n_entities);
    });
    auto neg_content = draw_unique(rng, n_neg, [this](Rng& r) {
      return labeled_style_triple(r, 0, "el", spec_.n_entities);
    });
    add_labeled(world, rng, pos_content, 1);
    add_labeled(world, rng, neg_content, 0);
  }

  void build_pool(SyntheticWorld& world) {
    Rng rng(derive_seed(spec_.seed, "synth.pool"));
    world.bundle.unlabeled =
        draw_unique(rng, spec_.n_unlabeled, [this](Rng& r) {
          int planted = static_cast<int>(r.below(2));
          return pool_style_triple(r, planted);
        });
  }

  // Eval heads never reuse labeled-set entities: the in-domain split uses
  // held-out labeled-domain entities, the out-of-domain splits pool entities.
  void build_eval(SyntheticWorld& world) {
    std::size_t n_eval_entities = std::max<std::size_t>(spec_.n_entities / 2, 2);
    for (const auto& name : eval_split_names()) {
      Rng rng(derive_seed(spec_.seed, "synth.eval." + name));
      std::vector<LabeledExample> split;
      split.reserve(spec_.n_eval_per_split);
      auto content = draw_unique(
          rng, spec_.n_eval_per_split, [&, this](Rng& r) {
            int planted = static_cast<int>(r.below(2));
            if (name == "original_test")
              return labeled_style_triple(r, planted, "ee", n_eval_entities);
            if (name == "cskb_head_aser_tail")
              return ood_tail_triple(r, planted,
                                     labeled_head(r, "ee", n_eval_entities));
            return ood_tail_triple(r, planted, pool_head(r));
          });
      for (const auto& t : content) {
        int label = world.plausible(t) ? 1 : 0;
        if (rng.bernoulli(spec_.noise_rate)) label = 1 - label;
        split.push_back({t, label});
      }
      world.bundle.eval_splits[name] = std::move(split);
    }
  }

  const SyntheticSpec& spec_;
  std::vector<Relation> relations_;
  std::size_t half_;
  std::unordered_set<std::string> used_;
};

}  // namespace detail

inline SyntheticWorld generate_synthetic_world(const SyntheticSpec& spec) {
  return detail::SyntheticBuilder(spec).build();
}

inline DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_world(spec).bundle;
}

}  // namespace kgpop
