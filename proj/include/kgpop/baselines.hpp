#pragma once
// Baseline drivers: run a comparison method end to end on a dataset bundle
// and report evaluation results next to the supervised student.

#include <fstream>
#include <string>
#include <vector>

#include "kgpop/eval.hpp"
#include "kgpop/io.hpp"
#include "kgpop/pipeline.hpp"
#include "kgpop/ssl.hpp"

namespace kgpop {

struct BaselineArtifacts {
  EvalReport eval_supervised;
  EvalReport eval_baseline;
};

inline EvalReport evaluate_model(
    const StudentModel& model,
    const std::map<std::string, std::vector<LabeledExample>>& splits) {
  return evaluate_splits(
      [&](const Triple& t) { return model.predict(t); }, splits);
}

struct UdaBaselineOptions {
  UdaConfig uda;
  TrainConfig train;
  FeatureConfig features;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

inline BaselineArtifacts run_uda_baseline(const DatasetBundle& bundle,
                                          const UdaBaselineOptions& opt,
                                          const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto parts = split_dataset(bundle.labeled(), opt.split_fractions,
                             derive_seed(opt.seed, "stage.split"));
  TrainConfig tcfg = opt.train;
  tcfg.seed = derive_seed(opt.seed, "stage.student");
  UdaConfig ucfg = opt.uda;
  ucfg.seed = derive_seed(opt.seed, "stage.uda");

  StudentModel supervised = train_student(parts[0], tcfg, opt.features);
  StudentModel uda_model =
      uda_train(parts[0], bundle.unlabeled, ucfg, tcfg, opt.features);

  BaselineArtifacts out;
  out.eval_supervised = evaluate_model(supervised, bundle.eval_splits);
  out.eval_baseline = evaluate_model(uda_model, bundle.eval_splits);
  write_eval_report_tsv(out_dir + "/eval_supervised.tsv", out.eval_supervised);
  write_eval_report_tsv(out_dir + "/eval_uda.tsv", out.eval_baseline);
  save_student(out_dir + "/student_uda.model", uda_model);
  return out;
}

struct NoisyStudentBaselineOptions {
  NoiseConfig noise;
  TrainConfig train;
  FeatureConfig features;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

inline BaselineArtifacts run_noisy_student_baseline(
    const DatasetBundle& bundle, const NoisyStudentBaselineOptions& opt,
    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto parts = split_dataset(bundle.labeled(), opt.split_fractions,
                             derive_seed(opt.seed, "stage.split"));
  TrainConfig tcfg = opt.train;
  tcfg.seed = derive_seed(opt.seed, "stage.student");

  StudentModel supervised = train_student(parts[0], tcfg, opt.features);
  StudentModel iterated = noisy_student_iterate(parts[0], bundle.unlabeled,
                                                opt.noise, tcfg, opt.features);

  BaselineArtifacts out;
  out.eval_supervised = evaluate_model(supervised, bundle.eval_splits);
  out.eval_baseline = evaluate_model(iterated, bundle.eval_splits);
  write_eval_report_tsv(out_dir + "/eval_supervised.tsv", out.eval_supervised);
  write_eval_report_tsv(out_dir + "/eval_noisy_student.tsv",
                        out.eval_baseline);
  save_student(out_dir + "/student_noisy.model", iterated);
  return out;
}

struct GdaugBaselineOptions {
  int teacher_order = 3;
  double teacher_k = 0.1;
  int samples_per_head = 2;
  int max_len = 8;
  std::size_t n_heads = 2000;     // prompts drawn from the pool
  double temperature = 1.0;
  bool use_influence = true;
  bool use_diversity = true;
  bool use_student = true;
  std::size_t diversity_budget = 0;  // 0 = labeled train size
  InfluenceFilterConfig influence;
  TrainConfig train;
  TrainConfig finetune;
  FeatureConfig features;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

struct GdaugArtifacts : BaselineArtifacts {
  std::size_t n_generated = 0;
  std::size_t n_kept = 0;
  double bleu_pos = 0.0;  // generation quality against held-out positives
  double bleu_neg = 0.0;  // same for the negative generator
};

// Two-generator scheme: one teacher trained on positive triples produces
// positive candidates, one trained on the sampled negatives produces negative
// candidates. Candidates pass through influence, diversity and student
// filters before finetuning.
inline GdaugArtifacts run_gdaug_baseline(const DatasetBundle& bundle,
                                         const GdaugBaselineOptions& opt,
                                         const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto parts = split_dataset(bundle.labeled(), opt.split_fractions,
                             derive_seed(opt.seed, "stage.split"));
  const auto& train = parts[0];
  const auto& dev = parts[1];

  std::vector<Triple> train_pos, train_neg;
  for (const auto& ex : train)
    (ex.label == 1 ? train_pos : train_neg).push_back(ex.triple);
  if (train_pos.empty() || train_neg.empty())
    throw std::invalid_argument("gdaug: need both labels in the train split");

  NgramTeacher gen_pos =
      train_teacher(train_pos, opt.teacher_order, opt.teacher_k);
  NgramTeacher gen_neg =
      train_teacher(train_neg, opt.teacher_order, opt.teacher_k);

  // Prompts: distinct (head, relation) pairs from the unlabeled pool.
  std::vector<std::pair<std::string, Relation>> prompts;
  {
    std::set<std::string> seen;
    Rng rng(derive_seed(opt.seed, "gdaug.heads"));
    std::vector<std::size_t> order(bundle.unlabeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i : order) {
      if (prompts.size() >= opt.n_heads) break;
      const Triple& t = bundle.unlabeled[i];
      std::string key = join_tokens(tokenize(t.head)) + "\t" +
                        std::string(relation_name(t.relation));
      if (seen.insert(key).second) prompts.push_back({t.head, t.relation});
    }
  }

  std::vector<PseudoExample> candidates;
  auto generated_pos =
      gdaug_generate(gen_pos, prompts, opt.samples_per_head, opt.max_len,
                     derive_seed(opt.seed, "gdaug.pos"), opt.temperature);
  auto generated_neg =
      gdaug_generate(gen_neg, prompts, opt.samples_per_head, opt.max_len,
                     derive_seed(opt.seed, "gdaug.neg"), opt.temperature);
  for (const auto& t : generated_pos)
    candidates.push_back({t, 1, gen_pos.score(t), "gdaug-pos"});
  for (const auto& t : generated_neg)
    candidates.push_back({t, 0, gen_neg.score(t), "gdaug-neg"});
  write_pseudo(out_dir + "/gdaug_candidates.tsv", candidates, true);

  TrainConfig tcfg = opt.train;
  tcfg.seed = derive_seed(opt.seed, "stage.student");
  StudentModel supervised = train_student(train, tcfg, opt.features);

  std::vector<PseudoExample> kept = candidates;
  if (opt.use_influence && !kept.empty()) {
    InfluenceFilterConfig icfg = opt.influence;
    icfg.lissa.seed = derive_seed(opt.seed, "stage.lissa");
    kept = filter_by_influence(kept, supervised, train, dev, icfg).first;
  }
  if (opt.use_diversity && !kept.empty()) {
    std::size_t budget =
        opt.diversity_budget ? opt.diversity_budget : train.size();
    std::vector<Triple> triples;
    triples.reserve(kept.size());
    for (const auto& p : kept) triples.push_back(p.triple);
    auto selected = diversity_filter(triples, budget);
    std::set<std::string> chosen;
    for (const auto& t : selected) chosen.insert(triple_key(t));
    std::vector<PseudoExample> filtered;
    for (const auto& p : kept)
      if (chosen.count(triple_key(p.triple))) filtered.push_back(p);
    kept = std::move(filtered);
  }
  if (opt.use_student && !kept.empty())
    kept = filter_by_student(kept, supervised);
  write_pseudo(out_dir + "/gdaug_kept.tsv", kept, true);

  StudentModel final_model = supervised;
  if (!kept.empty()) {
    TrainConfig fcfg = opt.finetune;
    fcfg.seed = derive_seed(opt.seed, "stage.finetune");
    final_model =
        train_student(to_labeled(kept), fcfg, opt.features, &supervised);
  }

  GdaugArtifacts out;
  out.n_generated = candidates.size();
  out.n_kept = kept.size();
  out.eval_supervised = evaluate_model(supervised, bundle.eval_splits);
  out.eval_baseline = evaluate_model(final_model, bundle.eval_splits);

  // Generation-quality diagnostic: greedy decodes against held-out tails.
  auto bleu_against = [&](const NgramTeacher& gen, int label) {
    std::vector<Tokens> hyps, refs;
    for (const auto& ex : dev) {
      if (ex.label != label) continue;
      auto decoded = gdaug_generate(gen, {{ex.triple.head, ex.triple.relation}},
                                    1, opt.max_len,
                                    derive_seed(opt.seed, "gdaug.bleu"), 0.0);
      if (decoded.empty()) continue;
      hyps.push_back(tokenize(decoded[0].tail));
      refs.push_back(tokenize(ex.triple.tail));
    }
    if (hyps.empty()) return 0.0;
    try {
      return bleu2(hyps, refs);
    } catch (const std::invalid_argument&) {
      return 0.0;
    }
  };
  out.bleu_pos = bleu_against(gen_pos, 1);
  out.bleu_neg = bleu_against(gen_neg, 0);

  write_eval_report_tsv(out_dir + "/eval_supervised.tsv", out.eval_supervised);
  write_eval_report_tsv(out_dir + "/eval_gdaug.tsv", out.eval_baseline);
  std::ofstream summary = open_out(out_dir + "/gdaug_summary.txt");
  summary << "generated = " << out.n_generated << '\n';
  summary << "kept = " << out.n_kept << '\n';
  summary << "bleu2.positive_generator = " << fmt6(out.bleu_pos) << '\n';
  summary << "bleu2.negative_generator = " << fmt6(out.bleu_neg) << '\n';
  return out;
}

}  // namespace kgpop
