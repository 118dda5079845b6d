// Command-line surface for the pseudo-labeling pipeline. Subcommands mirror
// the pipeline stages; `run` chains them end to end. Exit codes: 0 success,
// 2 validation error, 3 stage failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgpop/kgpop.hpp"

namespace {

using namespace kgpop;

std::vector<double> parse_csv_numbers(const std::string& csv,
                                      std::size_t expected,
                                      const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    std::string part = comma == std::string::npos
                           ? csv.substr(start)
                           : csv.substr(start, comma - start);
    if (!part.empty()) out.push_back(std::stod(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.size() != expected)
    throw std::invalid_argument(what + ": expected " +
                                std::to_string(expected) + " numbers");
  return out;
}

struct TrainFlags {
  std::uint32_t dim = 1u << 18;
  std::string orders = "1,2";
  std::uint64_t hash_seed = 0x6b677031;
  double lr = 0.2;
  int epochs = 40;
  double l2 = 1e-4;
  int batch = 32;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dim", dim, "feature hashing range");
    cmd->add_option("--orders", orders, "feature n-gram orders, e.g. 1,2");
    cmd->add_option("--hash-seed", hash_seed, "feature hash seed");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--l2", l2, "L2 regularization strength");
    cmd->add_option("--batch", batch, "mini-batch size");
  }

  FeatureConfig features() const {
    FeatureConfig cfg;
    cfg.dim = dim;
    cfg.hash_seed = hash_seed;
    cfg.orders.clear();
    std::size_t start = 0;
    while (start <= orders.size()) {
      std::size_t comma = orders.find(',', start);
      std::string part = comma == std::string::npos
                             ? orders.substr(start)
                             : orders.substr(start, comma - start);
      if (!part.empty()) cfg.orders.push_back(std::stoi(part));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cfg;
  }

  TrainConfig train(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.l2 = l2;
    cfg.batch_size = batch;
    cfg.seed = seed;
    return cfg;
  }
};

void print_report(const EvalReport& report) {
  std::printf("auc all %.6f\n", report.auc_all);
  for (const auto& [name, value] : report.auc_per_split)
    std::printf("auc %s %.6f\n", name.c_str(), value);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"semi-supervised pseudo-labeling for knowledge triples"};
  app.require_subcommand(1);

  // --- gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic benchmark");
  std::string gen_out;
  SyntheticSpec spec;
  std::string gen_relations;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", spec.seed, "generator seed")->required();
  gen->add_option("--labeled", spec.n_labeled, "labeled example count");
  gen->add_option("--unlabeled", spec.n_unlabeled, "unlabeled pool size");
  gen->add_option("--eval-per-split", spec.n_eval_per_split,
                  "examples per evaluation split");
  gen->add_option("--noise", spec.noise_rate, "label flip probability");
  gen->add_option("--entities", spec.n_entities, "labeled-domain entities");
  gen->add_option("--pool-entities", spec.n_pool_entities,
                  "pool-domain entities");
  gen->add_option("--fillers", spec.n_fillers, "labeled-domain fillers");
  gen->add_option("--pool-fillers", spec.n_pool_fillers, "pool-domain fillers");
  gen->add_option("--tag-classes", spec.n_tag_classes, "tail tag classes");
  gen->add_option("--relations", gen_relations,
                  "comma-separated relation subset");
  gen->callback([&] {
    if (!gen_relations.empty()) {
      spec.relations.clear();
      std::size_t start = 0;
      while (start <= gen_relations.size()) {
        std::size_t comma = gen_relations.find(',', start);
        std::string part = comma == std::string::npos
                               ? gen_relations.substr(start)
                               : gen_relations.substr(start, comma - start);
        if (!part.empty()) spec.relations.push_back(parse_relation(part));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    std::filesystem::create_directories(gen_out);
    DatasetBundle bundle = generate_synthetic(spec);
    save_dataset(BundlePaths::in_dir(gen_out), bundle);
    std::printf("labeled %zu (pos %zu / neg %zu), unlabeled %zu\n",
                bundle.labeled_pos.size() + bundle.labeled_neg.size(),
                bundle.labeled_pos.size(), bundle.labeled_neg.size(),
                bundle.unlabeled.size());
  });

  // --- train-teacher
  auto* tt = app.add_subcommand("train-teacher",
                                "train the n-gram teacher on positives");
  std::string tt_labeled, tt_out;
  int tt_order = 3;
  double tt_k = 0.1;
  tt->add_option("--labeled", tt_labeled, "labeled TSV (train split)")
      ->required();
  tt->add_option("--order", tt_order, "n-gram order");
  tt->add_option("--k", tt_k, "add-k smoothing constant");
  tt->add_option("--out", tt_out, "teacher model path")->required();
  tt->callback([&] { stage_train_teacher(tt_labeled, tt_order, tt_k, tt_out); });

  // --- score
  auto* sc = app.add_subcommand("score", "score the unlabeled pool");
  std::string sc_kind = "ngram", sc_model, sc_unlabeled, sc_external, sc_out;
  sc->add_option("--kind", sc_kind, "ngram | student | external");
  sc->add_option("--model", sc_model, "teacher or student model path");
  sc->add_option("--unlabeled", sc_unlabeled, "unlabeled TSV")->required();
  sc->add_option("--scores", sc_external, "external score TSV");
  sc->add_option("--out", sc_out, "output score TSV")->required();
  sc->callback(
      [&] { stage_score(sc_kind, sc_model, sc_unlabeled, sc_external, sc_out); });

  // --- pseudo-label
  auto* pl = app.add_subcommand("pseudo-label",
                                "band-threshold scores into pseudo labels");
  std::string pl_scores, pl_labeled, pl_out;
  std::string pl_mode = "absolute";
  std::string pl_bands = "-4.0,-3.7,-2.8,-2.0";
  std::string pl_quantiles = "0.02,0.40,0.60,0.98";
  bool pl_balance = false;
  std::uint64_t pl_seed = 0;
  pl->add_option("--scores", pl_scores, "score TSV")->required();
  pl->add_option("--mode", pl_mode, "absolute | quantile");
  pl->add_option("--bands", pl_bands, "neg_min,neg_max,pos_min,pos_max");
  pl->add_option("--quantiles", pl_quantiles,
                 "quantiles for the four band edges");
  pl->add_flag("--balance", pl_balance, "balance per relation and label");
  pl->add_option("--labeled", pl_labeled,
                 "labeled train TSV providing balance targets");
  pl->add_option("--seed", pl_seed, "root seed");
  pl->add_option("--out", pl_out, "output pseudo-label TSV")->required();
  pl->callback([&] {
    BandSpec bands;
    bands.mode = pl_mode;
    auto b = parse_csv_numbers(pl_bands, 4, "--bands");
    bands.neg_min = b[0];
    bands.neg_max = b[1];
    bands.pos_min = b[2];
    bands.pos_max = b[3];
    auto q = parse_csv_numbers(pl_quantiles, 4, "--quantiles");
    bands.q_neg_min = q[0];
    bands.q_neg_max = q[1];
    bands.q_pos_min = q[2];
    bands.q_pos_max = q[3];
    if (pl_balance && pl_labeled.empty())
      throw std::invalid_argument("--balance requires --labeled");
    stage_pseudo_label(pl_scores, bands, pl_balance, pl_labeled, pl_seed,
                       pl_out);
  });

  // --- filter-influence
  auto* fi = app.add_subcommand("filter-influence",
                                "drop pseudo examples with positive harm");
  std::string fi_pseudo, fi_student, fi_train, fi_dev, fi_out, fi_report;
  InfluenceFilterConfig fi_cfg;
  std::uint64_t fi_seed = 0;
  fi->add_option("--pseudo", fi_pseudo, "pseudo-label TSV")->required();
  fi->add_option("--student", fi_student, "student model path")->required();
  fi->add_option("--train", fi_train, "labeled train TSV")->required();
  fi->add_option("--dev", fi_dev, "labeled dev TSV")->required();
  fi->add_option("--depth", fi_cfg.lissa.depth, "LiSSA depth");
  fi->add_option("--damping", fi_cfg.lissa.damping, "Hessian damping");
  fi->add_option("--scale", fi_cfg.lissa.scale, "LiSSA scale");
  fi->add_option("--repeats", fi_cfg.lissa.repeats, "LiSSA repeats");
  fi->add_option("--lissa-batch", fi_cfg.lissa.batch,
                 "stochastic batch size (0 = auto)");
  fi->add_option("--tol", fi_cfg.optimality_tol,
                 "required gradient-norm optimality tolerance (0 = skip)");
  fi->add_option("--seed", fi_seed, "root seed");
  fi->add_option("--out", fi_out, "kept pseudo TSV")->required();
  fi->add_option("--report", fi_report, "influence report TSV")->required();
  fi->callback([&] {
    stage_filter_influence(fi_pseudo, fi_student, fi_train, fi_dev, fi_cfg,
                           fi_seed, fi_out, fi_report);
  });

  // --- filter-student
  auto* fs = app.add_subcommand(
      "filter-student", "keep pseudo examples the student agrees with");
  std::string fs_pseudo, fs_student, fs_out;
  fs->add_option("--pseudo", fs_pseudo, "pseudo-label TSV")->required();
  fs->add_option("--student", fs_student, "student model path")->required();
  fs->add_option("--out", fs_out, "kept pseudo TSV")->required();
  fs->callback(
      [&] { stage_filter_student(fs_pseudo, fs_student, fs_out); });

  // --- finetune (doubles as the supervised trainer when --init is absent)
  auto* ft = app.add_subcommand("finetune", "train or finetune the student");
  std::string ft_data, ft_init, ft_mix, ft_out;
  TrainFlags ft_flags;
  std::uint64_t ft_seed = 0;
  ft->add_option("--data", ft_data, "labeled or pseudo-labeled TSV")
      ->required();
  ft->add_option("--init", ft_init, "initial student model");
  ft->add_option("--mix", ft_mix, "additional labeled TSV mixed in");
  ft_flags.attach(ft);
  ft->add_option("--seed", ft_seed, "training seed");
  ft->add_option("--out", ft_out, "output model path")->required();
  ft->callback([&] {
    stage_train_student(ft_data, ft_flags.features(), ft_flags.train(ft_seed),
                        ft_out, ft_init, ft_mix);
  });

  // --- evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a student model");
  std::string ev_model, ev_data, ev_out, ev_txt;
  ev->add_option("--model", ev_model, "student model path")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--out", ev_out, "report TSV path")->required();
  ev->add_option("--out-txt", ev_txt, "report text path");
  ev->callback([&] {
    EvalReport report = stage_evaluate(
        ev_model, BundlePaths::in_dir(ev_data), ev_out, ev_txt);
    print_report(report);
  });

  // --- diversity
  auto* dv = app.add_subcommand("diversity",
                                "n-gram diversity of a triple file");
  std::string dv_input;
  int dv_n = 1;
  dv->add_option("--input", dv_input, "triple TSV")->required();
  dv->add_option("--n", dv_n, "n-gram size");
  dv->callback([&] {
    std::vector<Tokens> corpus;
    for (const auto& row : read_triple_rows(dv_input))
      corpus.push_back(serialize_triple(row.triple));
    std::printf("diversity %d-gram %.6f\n", dv_n,
                ngram_diversity(corpus, dv_n));
  });

  // --- run
  auto* run = app.add_subcommand("run", "end-to-end pipeline");
  std::string run_config;
  std::uint64_t run_seed = 0;
  std::vector<std::string> run_sets;
  std::map<std::string, std::string> run_overrides;
  run->add_option("--config", run_config, "config file (key = value)");
  run->add_option("--seed", run_seed, "root seed")->required();
  run->add_option("--set", run_sets, "override, key=value (repeatable)");
  for (const auto& key : config_registry()) {
    if (key.name == "pipeline.seed") continue;
    run->add_option("--" + key.name, run_overrides[key.name], key.help);
  }
  run->callback([&] {
    KvConfig kv = run_config.empty() ? KvConfig() : KvConfig::from_file(run_config);
    for (const auto& kvpair : run_sets) {
      auto eq = kvpair.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value: " + kvpair);
      kv.set(kvpair.substr(0, eq), kvpair.substr(eq + 1));
    }
    for (const auto& [key, value] : run_overrides)
      if (!value.empty()) kv.set(key, value);
    kv.set("pipeline.seed", std::to_string(run_seed));
    PipelineConfig cfg = PipelineConfig::from_kv(kv);
    RunResult result = run_pipeline(cfg);
    std::printf("pseudo %zu -> finetune %zu\n", result.n_pseudo,
                result.n_finetune);
    std::printf("supervised: ");
    print_report(result.eval_supervised);
    std::printf("final: ");
    print_report(result.eval_final);
  });

  // --- baselines
  auto* base = app.add_subcommand("baseline", "comparison methods");
  base->require_subcommand(1);

  auto* uda = base->add_subcommand("uda", "consistency training");
  std::string uda_data, uda_out = "out-uda";
  TrainFlags uda_flags;
  UdaBaselineOptions uda_opt;
  bool uda_grid = false;
  std::uint64_t uda_seed = 0;
  uda->add_option("--data", uda_data, "dataset directory")->required();
  uda->add_option("--out", uda_out, "output directory");
  uda->add_option("--lambda", uda_opt.uda.lambda, "consistency weight");
  uda->add_option("--ratio", uda_opt.uda.ratio, "unsupervised example ratio");
  uda->add_option("--replace-prob", uda_opt.uda.replace_prob,
                  "token replacement probability");
  uda->add_flag("--grid", uda_grid, "sweep lambda, ratio over {0.3, 1, 3}");
  uda_flags.attach(uda);
  uda->add_option("--seed", uda_seed, "root seed")->required();
  uda->callback([&] {
    DatasetBundle bundle = load_dataset(BundlePaths::in_dir(uda_data));
    uda_opt.features = uda_flags.features();
    uda_opt.train = uda_flags.train(0);
    uda_opt.seed = uda_seed;
    if (!uda_grid) {
      auto result = run_uda_baseline(bundle, uda_opt, uda_out);
      std::printf("supervised: ");
      print_report(result.eval_supervised);
      std::printf("uda: ");
      print_report(result.eval_baseline);
      return;
    }
    const double grid[3] = {0.3, 1.0, 3.0};
    for (double lambda : grid)
      for (double ratio : grid) {
        UdaBaselineOptions opt = uda_opt;
        opt.uda.lambda = lambda;
        opt.uda.ratio = ratio;
        auto result = run_uda_baseline(
            bundle, opt,
            uda_out + "/lambda" + std::to_string(lambda) + "-r" +
                std::to_string(ratio));
        std::printf("lambda %.1f ratio %.1f auc_all %.6f\n", lambda, ratio,
                    result.eval_baseline.auc_all);
      }
  });

  auto* ns = base->add_subcommand("noisy-student", "iterative self-training");
  std::string ns_data, ns_out = "out-noisy-student";
  TrainFlags ns_flags;
  NoisyStudentBaselineOptions ns_opt;
  std::uint64_t ns_seed = 0;
  ns->add_option("--data", ns_data, "dataset directory")->required();
  ns->add_option("--out", ns_out, "output directory");
  ns->add_option("--iterations", ns_opt.noise.iterations, "self-training rounds");
  ns->add_option("--dropout", ns_opt.noise.dropout_p, "feature dropout rate");
  ns->add_flag("--soft", ns_opt.noise.soft, "use soft pseudo labels");
  ns_flags.attach(ns);
  ns->add_option("--seed", ns_seed, "root seed")->required();
  ns->callback([&] {
    DatasetBundle bundle = load_dataset(BundlePaths::in_dir(ns_data));
    ns_opt.features = ns_flags.features();
    ns_opt.train = ns_flags.train(0);
    ns_opt.seed = ns_seed;
    auto result = run_noisy_student_baseline(bundle, ns_opt, ns_out);
    std::printf("supervised: ");
    print_report(result.eval_supervised);
    std::printf("noisy-student: ");
    print_report(result.eval_baseline);
  });

  auto* gd = base->add_subcommand("gdaug", "generative augmentation");
  std::string gd_data, gd_out = "out-gdaug";
  TrainFlags gd_flags;
  GdaugBaselineOptions gd_opt;
  std::uint64_t gd_seed = 0;
  gd->add_option("--data", gd_data, "dataset directory")->required();
  gd->add_option("--out", gd_out, "output directory");
  gd->add_option("--order", gd_opt.teacher_order, "generator n-gram order");
  gd->add_option("--k", gd_opt.teacher_k, "generator smoothing");
  gd->add_option("--samples", gd_opt.samples_per_head, "samples per prompt");
  gd->add_option("--max-len", gd_opt.max_len, "max decoded tail length");
  gd->add_option("--heads", gd_opt.n_heads, "prompts drawn from the pool");
  gd->add_option("--temperature", gd_opt.temperature, "decode temperature");
  gd->add_option("--diversity-budget", gd_opt.diversity_budget,
                 "diversity filter budget (0 = train size)");
  gd->add_flag("!--no-influence", gd_opt.use_influence, "disable influence filter");
  gd->add_flag("!--no-diversity", gd_opt.use_diversity, "disable diversity filter");
  gd->add_flag("!--no-student", gd_opt.use_student, "disable student filter");
  gd_flags.attach(gd);
  gd->add_option("--seed", gd_seed, "root seed")->required();
  gd->callback([&] {
    DatasetBundle bundle = load_dataset(BundlePaths::in_dir(gd_data));
    gd_opt.features = gd_flags.features();
    gd_opt.train = gd_flags.train(0);
    gd_opt.finetune = gd_opt.train;
    gd_opt.seed = gd_seed;
    auto result = run_gdaug_baseline(bundle, gd_opt, gd_out);
    std::printf("generated %zu, kept %zu\n", result.n_generated,
                result.n_kept);
    std::printf("bleu2 pos %.6f neg %.6f\n", result.bleu_pos, result.bleu_neg);
    std::printf("supervised: ");
    print_report(result.eval_supervised);
    std::printf("gdaug: ");
    print_report(result.eval_baseline);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a validation error
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const kgpop::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
