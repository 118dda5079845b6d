#pragma once
// End-to-end orchestration of the four-step workflow: train teacher and
// student on the labeled data, band-threshold teacher scores on the pool into
// pseudo labels, filter them, finetune the student on the survivors.
//
// Every stage reads and writes artifact files; the run command chains the
// same stage functions the CLI subcommands expose, so re-running any stage
// from persisted artifacts reproduces downstream artifacts byte for byte.

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgpop/config.hpp"
#include "kgpop/dataset.hpp"
#include "kgpop/eval.hpp"
#include "kgpop/influence.hpp"
#include "kgpop/io.hpp"
#include "kgpop/pseudo.hpp"
#include "kgpop/student.hpp"
#include "kgpop/synthetic.hpp"
#include "kgpop/teacher.hpp"

namespace kgpop {

struct StageError : std::runtime_error {
  std::string stage;
  StageError(const std::string& stage_name, const std::string& what)
      : std::runtime_error("stage " + stage_name + " failed: " + what),
        stage(stage_name) {}
};

struct PipelineConfig {
  std::string data_dir;
  std::string external_scores;
  std::string out_dir = "out";

  std::string teacher_kind = "ngram";  // ngram | external | student
  int teacher_order = 3;
  double teacher_k = 0.1;

  FeatureConfig features;
  TrainConfig student_train;
  TrainConfig finetune_train;
  bool mix_labeled = false;

  std::string bands_mode = "absolute";  // absolute | quantile
  double neg_min = -4.0, neg_max = -3.7, pos_min = -2.8, pos_max = -2.0;
  double q_neg_min = 0.02, q_neg_max = 0.40, q_pos_min = 0.60,
         q_pos_max = 0.98;

  bool filter_influence = true;
  bool filter_student = true;
  std::string filter_order = "influence-first";
  InfluenceFilterConfig influence;

  bool balance = true;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;

  static PipelineConfig from_kv(const KvConfig& kv) {
    PipelineConfig c;
    c.data_dir = kv.str("data.dir");
    c.external_scores = kv.str("data.scores");
    c.out_dir = kv.str("output.dir");
    c.teacher_kind = kv.str("teacher.kind");
    if (c.teacher_kind != "ngram" && c.teacher_kind != "external" &&
        c.teacher_kind != "student")
      throw std::invalid_argument("teacher.kind must be ngram, external or "
                                  "student");
    c.teacher_order = static_cast<int>(kv.integer("teacher.order"));
    c.teacher_k = kv.num("teacher.k");
    c.features.dim = static_cast<std::uint32_t>(kv.u64("student.dim"));
    c.features.orders.clear();
    for (double o : kv.num_list("student.orders"))
      c.features.orders.push_back(static_cast<int>(o));
    c.features.hash_seed = kv.u64("student.hash_seed");
    c.student_train.learning_rate = kv.num("student.lr");
    c.student_train.epochs = static_cast<int>(kv.integer("student.epochs"));
    c.student_train.l2 = kv.num("student.l2");
    c.student_train.batch_size = static_cast<int>(kv.integer("student.batch"));
    c.finetune_train = c.student_train;
    c.finetune_train.learning_rate = kv.num("finetune.lr");
    c.finetune_train.epochs = static_cast<int>(kv.integer("finetune.epochs"));
    c.mix_labeled = kv.boolean("finetune.mix_labeled");
    c.bands_mode = kv.str("bands.mode");
    if (c.bands_mode != "absolute" && c.bands_mode != "quantile")
      throw std::invalid_argument("bands.mode must be absolute or quantile");
    c.neg_min = kv.num("bands.neg_min");
    c.neg_max = kv.num("bands.neg_max");
    c.pos_min = kv.num("bands.pos_min");
    c.pos_max = kv.num("bands.pos_max");
    c.q_neg_min = kv.num("bands.q_neg_min");
    c.q_neg_max = kv.num("bands.q_neg_max");
    c.q_pos_min = kv.num("bands.q_pos_min");
    c.q_pos_max = kv.num("bands.q_pos_max");
    c.filter_influence = kv.boolean("filters.influence");
    c.filter_student = kv.boolean("filters.student");
    c.filter_order = kv.str("filters.order");
    if (c.filter_order != "influence-first" &&
        c.filter_order != "student-first")
      throw std::invalid_argument(
          "filters.order must be influence-first or student-first");
    c.influence.optimality_tol = kv.num("filters.optimality_tol");
    c.influence.lissa.depth = static_cast<int>(kv.integer("lissa.depth"));
    c.influence.lissa.damping = kv.num("lissa.damping");
    c.influence.lissa.scale = kv.num("lissa.scale");
    c.influence.lissa.repeats = static_cast<int>(kv.integer("lissa.repeats"));
    c.influence.lissa.batch = static_cast<int>(kv.integer("lissa.batch"));
    c.balance = kv.boolean("pipeline.balance");
    auto fractions = kv.num_list("pipeline.split");
    if (fractions.size() != 3)
      throw std::invalid_argument("pipeline.split needs three fractions");
    c.split_fractions = {fractions[0], fractions[1], fractions[2]};
    c.seed = kv.u64("pipeline.seed");
    return c;
  }
};

// --- stage functions --------------------------------------------------------

// Split the labeled file into train/dev/test artifacts. An explicit split
// column wins; otherwise heads are grouped and assigned by seeded draw.
inline void stage_split(const std::string& labeled_path,
                        const std::array<double, 3>& fractions,
                        std::uint64_t root_seed, const std::string& train_path,
                        const std::string& dev_path,
                        const std::string& test_path) {
  auto rows = read_triple_rows(labeled_path);
  if (rows.empty())
    throw std::invalid_argument(labeled_path + ": no labeled rows");
  bool has_split = true;
  for (const auto& row : rows)
    if (!row.split) {
      has_split = false;
      break;
    }
  std::vector<LabeledExample> train, dev, test;
  if (has_split) {
    for (const auto& row : rows) {
      if (!row.label)
        throw std::invalid_argument(labeled_path + ": unlabeled row");
      LabeledExample ex{row.triple, *row.label};
      if (*row.split == "trn")
        train.push_back(ex);
      else if (*row.split == "dev")
        dev.push_back(ex);
      else
        test.push_back(ex);
    }
    if (train.empty() || dev.empty())
      throw std::invalid_argument(
          labeled_path + ": explicit split leaves train or dev empty");
  } else {
    std::vector<LabeledExample> labeled;
    for (const auto& row : rows) {
      if (!row.label)
        throw std::invalid_argument(labeled_path + ": unlabeled row");
      labeled.push_back({row.triple, *row.label});
    }
    auto parts = split_dataset(labeled, fractions,
                               derive_seed(root_seed, "stage.split"));
    train = std::move(parts[0]);
    dev = std::move(parts[1]);
    test = std::move(parts[2]);
  }
  write_labeled(train_path, train);
  write_labeled(dev_path, dev);
  write_labeled(test_path, test);
}

inline void stage_train_teacher(const std::string& labeled_train_path,
                                int order, double k,
                                const std::string& out_model) {
  auto labeled = read_labeled(labeled_train_path);
  std::vector<Triple> positives;
  for (const auto& ex : labeled)
    if (ex.label == 1) positives.push_back(ex.triple);
  save_teacher(out_model, train_teacher(positives, order, k));
}

// Supervised training and finetuning share this stage; finetuning passes the
// model to initialize from.
inline void stage_train_student(const std::string& data_path,
                                const FeatureConfig& fcfg,
                                const TrainConfig& tcfg,
                                const std::string& out_model,
                                const std::string& init_model_path = "",
                                const std::string& mix_path = "") {
  std::vector<LabeledExample> data;
  for (const auto& row : read_triple_rows(data_path)) {
    if (!row.label) throw std::invalid_argument(data_path + ": unlabeled row");
    data.push_back({row.triple, *row.label});
  }
  if (!mix_path.empty()) {
    for (const auto& ex : read_labeled(mix_path)) data.push_back(ex);
  }
  std::optional<StudentModel> init;
  if (!init_model_path.empty()) init = load_student(init_model_path);
  if (data.empty() && init) {
    save_student(out_model, *init);  // nothing to finetune on
    return;
  }
  StudentModel model =
      train_student(data, tcfg, fcfg, init ? &*init : nullptr);
  save_student(out_model, model);
}

// Score the unlabeled pool. kind=ngram loads a teacher model, kind=student a
// student model, kind=external rewrites a user-provided score file after
// validating it covers the pool exactly.
inline void stage_score(const std::string& kind,
                        const std::string& model_path,
                        const std::string& unlabeled_path,
                        const std::string& external_scores_path,
                        const std::string& out_scores) {
  auto pool = read_unlabeled(unlabeled_path);
  std::vector<ScoredTriple> scored;
  scored.reserve(pool.size());
  if (kind == "ngram") {
    NgramTeacher teacher = load_teacher(model_path);
    for (const auto& t : pool) scored.push_back({t, teacher.score(t)});
  } else if (kind == "student") {
    StudentModel model = load_student(model_path);
    for (const auto& t : pool) scored.push_back({t, model.predict(t)});
  } else if (kind == "external") {
    auto provided = read_scores(external_scores_path);
    std::unordered_map<std::string, double> by_key;
    for (const auto& st : provided) by_key[triple_key(st.triple)] = st.score;
    std::size_t missing = 0;
    for (const auto& t : pool) {
      auto it = by_key.find(triple_key(t));
      if (it == by_key.end()) {
        ++missing;
        continue;
      }
      scored.push_back({t, it->second});
    }
    if (missing > 0)
      throw std::invalid_argument(
          external_scores_path + ": missing scores for " +
          std::to_string(missing) + " pool triples");
  } else {
    throw std::invalid_argument("unknown scorer kind: " + kind);
  }
  write_scores(out_scores, scored);
}

struct BandSpec {
  std::string mode = "absolute";
  double neg_min = -4.0, neg_max = -3.7, pos_min = -2.8, pos_max = -2.0;
  double q_neg_min = 0.02, q_neg_max = 0.40, q_pos_min = 0.60,
         q_pos_max = 0.98;

  ThresholdBands resolve(const std::vector<double>& scores) const {
    if (mode == "quantile")
      return quantile_bands(scores, q_neg_min, q_neg_max, q_pos_min,
                            q_pos_max);
    return ThresholdBands(neg_min, neg_max, pos_min, pos_max);
  }
};

// Mint pseudo labels from the score file and, when requested, down-sample per
// (relation, label) to the labeled training counts.
inline void stage_pseudo_label(const std::string& scores_path,
                               const BandSpec& bands, bool balance,
                               const std::string& labeled_train_path,
                               std::uint64_t root_seed,
                               const std::string& out_pseudo) {
  auto scored = read_scores(scores_path);
  std::vector<double> values;
  values.reserve(scored.size());
  for (const auto& st : scored) values.push_back(st.score);
  ThresholdBands resolved = bands.resolve(values);
  auto pseudo = assign_pseudo_labels(scored, resolved);
  if (balance) {
    auto labeled = read_labeled(labeled_train_path);
    std::uint64_t seed = derive_seed(root_seed, "stage.balance");
    std::vector<PseudoExample> pos, neg;
    for (const auto& p : pseudo)
      (p.pseudo_label == 1 ? pos : neg).push_back(p);
    auto kept_pos = balance_per_relation(pos, relation_counts(labeled, 1),
                                         derive_seed(seed, "pos"));
    auto kept_neg = balance_per_relation(neg, relation_counts(labeled, 0),
                                         derive_seed(seed, "neg"));
    std::unordered_set<std::string> kept_keys;
    for (const auto& p : kept_pos) kept_keys.insert(triple_key(p.triple));
    for (const auto& p : kept_neg) kept_keys.insert(triple_key(p.triple));
    std::vector<PseudoExample> merged;
    merged.reserve(kept_pos.size() + kept_neg.size());
    for (const auto& p : pseudo)
      if (kept_keys.count(triple_key(p.triple))) merged.push_back(p);
    pseudo = std::move(merged);
  }
  write_pseudo(out_pseudo, pseudo);
}

inline void stage_filter_influence(const std::string& pseudo_path,
                                   const std::string& student_model_path,
                                   const std::string& labeled_train_path,
                                   const std::string& labeled_dev_path,
                                   const InfluenceFilterConfig& cfg,
                                   std::uint64_t root_seed,
                                   const std::string& out_kept,
                                   const std::string& out_report) {
  auto pseudo = read_pseudo(pseudo_path);
  StudentModel model = load_student(student_model_path);
  auto train = read_labeled(labeled_train_path);
  auto val = read_labeled(labeled_dev_path);
  InfluenceFilterConfig used = cfg;
  used.lissa.seed = derive_seed(root_seed, "stage.lissa");
  auto [kept, report] = filter_by_influence(pseudo, model, train, val, used);
  write_pseudo(out_kept, kept);
  write_influence_report(out_report, report);
}

inline void stage_filter_student(const std::string& pseudo_path,
                                 const std::string& student_model_path,
                                 const std::string& out_kept) {
  auto pseudo = read_pseudo(pseudo_path);
  StudentModel model = load_student(student_model_path);
  write_pseudo(out_kept, filter_by_student(pseudo, model));
}

// AUC over the union of the two out-of-domain splits.
inline std::optional<double> ood_auc(
    const TripleScorer& scorer,
    const std::map<std::string, std::vector<LabeledExample>>& splits) {
  std::vector<ScoredLabel> pooled;
  for (const auto& name : {"cskb_head_aser_tail", "aser_edges"}) {
    auto it = splits.find(name);
    if (it == splits.end()) continue;
    for (const auto& ex : it->second)
      pooled.push_back({scorer(ex.triple), ex.label});
  }
  if (pooled.empty()) return std::nullopt;
  try {
    return auc(pooled);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

inline EvalReport stage_evaluate(const std::string& student_model_path,
                                 const BundlePaths& data,
                                 const std::string& out_tsv,
                                 const std::string& out_txt) {
  StudentModel model = load_student(student_model_path);
  std::map<std::string, std::vector<LabeledExample>> splits;
  for (const auto& [name, path] : data.eval_files)
    splits[name] = read_labeled(path);
  TripleScorer scorer = [&](const Triple& t) { return model.predict(t); };
  EvalReport report = evaluate_splits(scorer, splits);
  write_eval_report_tsv(out_tsv, report);
  if (auto ood = ood_auc(scorer, splits)) {
    std::ofstream app(out_tsv, std::ios::binary | std::ios::app);
    app << "auc\tood\t" << fmt6(*ood) << '\n';
  }
  if (!out_txt.empty()) write_eval_report_txt(out_txt, report);
  return report;
}

// --- the end-to-end run -----------------------------------------------------

struct RunArtifacts {
  std::string labeled_train, labeled_dev, labeled_test;
  std::string teacher_model, student_model, final_model;
  std::string scores, pseudo, pseudo_influence, pseudo_student;
  std::string influence_report;
  std::string eval_supervised_tsv, eval_supervised_txt;
  std::string eval_final_tsv, eval_final_txt;
  std::string summary;

  static RunArtifacts in_dir(const std::string& dir) {
    RunArtifacts a;
    a.labeled_train = dir + "/labeled_train.tsv";
    a.labeled_dev = dir + "/labeled_dev.tsv";
    a.labeled_test = dir + "/labeled_test.tsv";
    a.teacher_model = dir + "/teacher.model";
    a.student_model = dir + "/student_supervised.model";
    a.final_model = dir + "/student_final.model";
    a.scores = dir + "/scores.tsv";
    a.pseudo = dir + "/pseudo.tsv";
    a.pseudo_influence = dir + "/pseudo_kept_influence.tsv";
    a.pseudo_student = dir + "/pseudo_kept_student.tsv";
    a.influence_report = dir + "/influence_report.tsv";
    a.eval_supervised_tsv = dir + "/eval_supervised.tsv";
    a.eval_supervised_txt = dir + "/eval_supervised.txt";
    a.eval_final_tsv = dir + "/eval_final.tsv";
    a.eval_final_txt = dir + "/eval_final.txt";
    a.summary = dir + "/run_summary.txt";
    return a;
  }
};

struct RunResult {
  RunArtifacts artifacts;
  EvalReport eval_supervised;
  EvalReport eval_final;
  std::size_t n_pseudo = 0;       // after banding and balancing
  std::size_t n_after_influence = 0;
  std::size_t n_after_student = 0;
  std::size_t n_finetune = 0;
};

template <class Fn>
inline void run_stage(const std::string& out_dir, const std::string& name,
                      Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    std::ofstream flag(out_dir + "/_FAILED", std::ios::binary);
    flag << name << '\n';
    throw StageError(name, e.what());
  }
}

inline RunResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.data_dir.empty())
    throw std::invalid_argument("run: data.dir is required");
  std::filesystem::create_directories(cfg.out_dir);
  RunArtifacts art = RunArtifacts::in_dir(cfg.out_dir);
  BundlePaths data = BundlePaths::in_dir(cfg.data_dir);
  RunResult result;
  result.artifacts = art;

  run_stage(cfg.out_dir, "load", [&] { load_dataset(data); });

  run_stage(cfg.out_dir, "split", [&] {
    stage_split(data.labeled, cfg.split_fractions, cfg.seed, art.labeled_train,
                art.labeled_dev, art.labeled_test);
  });

  run_stage(cfg.out_dir, "train-teacher", [&] {
    if (cfg.teacher_kind == "ngram")
      stage_train_teacher(art.labeled_train, cfg.teacher_order, cfg.teacher_k,
                          art.teacher_model);
  });

  run_stage(cfg.out_dir, "train-student", [&] {
    TrainConfig tcfg = cfg.student_train;
    tcfg.seed = derive_seed(cfg.seed, "stage.student");
    stage_train_student(art.labeled_train, cfg.features, tcfg,
                        art.student_model);
  });

  run_stage(cfg.out_dir, "score", [&] {
    std::string model_path = cfg.teacher_kind == "student" ? art.student_model
                                                           : art.teacher_model;
    stage_score(cfg.teacher_kind, model_path, data.unlabeled,
                cfg.external_scores, art.scores);
  });

  run_stage(cfg.out_dir, "pseudo-label", [&] {
    BandSpec bands;
    bands.mode = cfg.bands_mode;
    bands.neg_min = cfg.neg_min;
    bands.neg_max = cfg.neg_max;
    bands.pos_min = cfg.pos_min;
    bands.pos_max = cfg.pos_max;
    bands.q_neg_min = cfg.q_neg_min;
    bands.q_neg_max = cfg.q_neg_max;
    bands.q_pos_min = cfg.q_pos_min;
    bands.q_pos_max = cfg.q_pos_max;
    stage_pseudo_label(art.scores, bands, cfg.balance, art.labeled_train,
                       cfg.seed, art.pseudo);
  });
  result.n_pseudo = read_pseudo(art.pseudo).size();

  // The two filters drop examples independently, so either order yields the
  // same kept set; the configured order decides which runs first.
  std::string current = art.pseudo;
  bool influence_first = cfg.filter_order != "student-first";
  for (int pass = 0; pass < 2; ++pass) {
    bool do_influence = (pass == 0) == influence_first;
    if (do_influence && cfg.filter_influence) {
      run_stage(cfg.out_dir, "filter-influence", [&] {
        stage_filter_influence(current, art.student_model, art.labeled_train,
                               art.labeled_dev, cfg.influence, cfg.seed,
                               art.pseudo_influence, art.influence_report);
      });
      current = art.pseudo_influence;
      result.n_after_influence = read_pseudo(current).size();
    } else if (!do_influence && cfg.filter_student) {
      run_stage(cfg.out_dir, "filter-student", [&] {
        stage_filter_student(current, art.student_model, art.pseudo_student);
      });
      current = art.pseudo_student;
      result.n_after_student = read_pseudo(current).size();
    }
  }
  result.n_finetune = read_pseudo(current).size();

  run_stage(cfg.out_dir, "finetune", [&] {
    TrainConfig tcfg = cfg.finetune_train;
    tcfg.seed = derive_seed(cfg.seed, "stage.finetune");
    stage_train_student(current, cfg.features, tcfg, art.final_model,
                        art.student_model,
                        cfg.mix_labeled ? art.labeled_train : "");
  });

  run_stage(cfg.out_dir, "evaluate", [&] {
    result.eval_supervised =
        stage_evaluate(art.student_model, data, art.eval_supervised_tsv,
                       art.eval_supervised_txt);
    result.eval_final = stage_evaluate(art.final_model, data,
                                       art.eval_final_tsv, art.eval_final_txt);
  });

  std::ofstream summary = open_out(art.summary);
  summary << "pseudo.balanced = " << result.n_pseudo << '\n';
  if (cfg.filter_influence)
    summary << "pseudo.after_influence = " << result.n_after_influence << '\n';
  if (cfg.filter_student)
    summary << "pseudo.after_student = " << result.n_after_student << '\n';
  summary << "pseudo.finetune_set = " << result.n_finetune << '\n';
  summary << "auc.supervised.all = " << fmt6(result.eval_supervised.auc_all)
          << '\n';
  summary << "auc.final.all = " << fmt6(result.eval_final.auc_all) << '\n';
  return result;
}

}  // namespace kgpop
