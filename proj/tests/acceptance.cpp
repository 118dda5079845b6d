// Acceptance suite: one check per shipped guarantee, each printed as a
// PASS/FAIL line. Exits nonzero if any check fails. An optional argv[1]
// points at the CLI binary; the determinism check then exercises the real
// `run` command instead of the in-process pipeline.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgpop/kgpop.hpp"
#include "test_util.hpp"

using namespace kgpop;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_results;

void record(int id, const std::string& name, bool pass,
            const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::printf("%s  criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "kgpop_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

// --- the pinned synthetic fixture -------------------------------------------

SyntheticSpec standard_spec() {
  SyntheticSpec spec;  // vocabulary sizes keep the pool far more diverse
  spec.n_entities = 300;
  spec.n_pool_entities = 3000;
  spec.n_fillers = 80;
  spec.n_pool_fillers = 800;
  spec.n_tag_classes = 8;
  spec.noise_rate = 0.1;
  spec.n_labeled = 2000;
  spec.n_unlabeled = 50000;
  spec.n_eval_per_split = 1000;
  spec.seed = 20240901ull;
  return spec;
}

PipelineConfig standard_config(const std::string& data_dir,
                               const std::string& out_dir) {
  PipelineConfig cfg;
  cfg.data_dir = data_dir;
  cfg.out_dir = out_dir;
  cfg.teacher_kind = "ngram";
  cfg.teacher_order = 2;
  cfg.teacher_k = 0.1;
  cfg.features.dim = 1u << 14;
  cfg.student_train.learning_rate = 0.3;
  cfg.student_train.epochs = 30;
  cfg.student_train.l2 = 1e-4;
  cfg.student_train.batch_size = 32;
  cfg.finetune_train = cfg.student_train;
  cfg.finetune_train.learning_rate = 0.15;
  cfg.finetune_train.epochs = 12;
  cfg.bands_mode = "quantile";
  cfg.q_neg_min = 0.02;
  cfg.q_neg_max = 0.40;
  cfg.q_pos_min = 0.60;
  cfg.q_pos_max = 0.98;
  cfg.influence.lissa.depth = 1000;
  cfg.influence.lissa.damping = 0.01;
  cfg.influence.lissa.scale = 25.0;
  cfg.influence.lissa.repeats = 2;
  cfg.seed = 424242ull;
  return cfg;
}

// Writes the same configuration as a config file for CLI runs.
void write_standard_config_file(const std::string& path,
                                const std::string& data_dir,
                                const std::string& out_dir) {
  std::ofstream out(path);
  out << "[data]\ndir = " << data_dir << "\n\n";
  out << "[output]\ndir = " << out_dir << "\n\n";
  out << "[teacher]\nkind = ngram\norder = 2\nk = 0.1\n\n";
  out << "[student]\ndim = 16384\nlr = 0.3\nepochs = 30\nl2 = 0.0001\n"
         "batch = 32\n\n";
  out << "[finetune]\nlr = 0.15\nepochs = 12\n\n";
  out << "[bands]\nmode = quantile\nq_neg_min = 0.02\nq_neg_max = 0.40\n"
         "q_pos_min = 0.60\nq_pos_max = 0.98\n\n";
  out << "[lissa]\ndepth = 1000\ndamping = 0.01\nscale = 25\nrepeats = 2\n";
}

// --- criterion 1: LiSSA vs dense solve --------------------------------------

void criterion_lissa() {
  auto start = Clock::now();
  Rng rng(1001);
  int instances = 0;
  double worst = 0.0;
  while (instances < 20) {
    FeatureConfig fcfg;
    fcfg.dim = 8 + static_cast<std::uint32_t>(rng.below(42));  // d <= 50
    auto labeled = testutil::random_labeled(20 + rng.below(40), rng);
    auto data = prepare_examples(labeled, fcfg);
    StudentModel m = StudentModel::zeros(fcfg, 0.2 + rng.uniform() * 0.3);
    for (auto& w : m.weights) w = rng.uniform() - 0.5;
    m.bias = rng.uniform() - 0.5;

    std::vector<double> v(m.weights.size() + 1);
    for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;

    LissaConfig cfg;
    cfg.depth = 1500;
    cfg.damping = 0.2 + rng.uniform() * 0.3;
    cfg.scale = 30.0;
    cfg.repeats = 1;
    cfg.seed = rng.next_u64();
    auto estimate = lissa_inverse_hvp(m, data, v, cfg);
    auto exact = testutil::dense_solve(
        testutil::materialize_hessian(m, data, cfg.damping), v);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      err += (estimate[i] - exact[i]) * (estimate[i] - exact[i]);
      norm += exact[i] * exact[i];
    }
    worst = std::max(worst, std::sqrt(err / norm));
    ++instances;
  }
  double elapsed = seconds_since(start);
  bool pass = worst < 1e-2 && elapsed < 10.0;
  record(1, "lissa vs dense solve", pass,
         "worst rel err " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// --- criterion 2: influence vs exact retraining ------------------------------

void criterion_influence_oracle() {
  auto start = Clock::now();
  Rng rng(424243);
  auto train = testutil::random_labeled(200, rng, 0.25);
  auto val = testutil::random_labeled(100, rng, 0.25);

  FeatureConfig fcfg;
  fcfg.dim = 10;
  TrainConfig tcfg;
  tcfg.learning_rate = 0.4;
  tcfg.epochs = 1500;
  tcfg.batch_size = 1 << 20;  // full batch
  tcfg.l2 = 0.1;
  tcfg.seed = 31;
  StudentModel model = train_student(train, tcfg, fcfg);

  LissaConfig lcfg;
  lcfg.depth = 2500;
  lcfg.damping = 0.01;
  lcfg.scale = 25.0;
  lcfg.repeats = 2;
  lcfg.seed = 32;
  InfluenceEngine engine(model, prepare_examples(train, fcfg),
                         prepare_examples(val, fcfg), lcfg);

  std::vector<double> estimated, actual;
  for (int i = 0; i < 50; ++i) {
    std::size_t idx = static_cast<std::size_t>(i) * 4;
    TrainExample z{featurize(train[idx].triple, fcfg),
                   static_cast<double>(train[idx].label)};
    estimated.push_back(engine.harm(z));
    actual.push_back(exact_loo_delta(train, val, train[idx], tcfg, fcfg));
  }
  double rho = testutil::spearman_rho(estimated, actual);

  // keep/drop sign agreement on the top and bottom estimated-harm deciles
  std::vector<std::size_t> order(estimated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return estimated[a] < estimated[b];
  });
  std::size_t decile = estimated.size() / 10;
  std::size_t agree = 0, total = 0;
  for (std::size_t k = 0; k < decile; ++k) {
    for (std::size_t idx : {order[k], order[order.size() - 1 - k]}) {
      ++total;
      if ((estimated[idx] <= 0.0) == (actual[idx] <= 0.0)) ++agree;
    }
  }
  double agreement = static_cast<double>(agree) / static_cast<double>(total);
  double elapsed = seconds_since(start);
  bool pass = rho >= 0.9 && agreement >= 0.9 && elapsed < 120.0;
  record(2, "influence vs retraining oracle", pass,
         "spearman " + fmt(rho) + ", decile agreement " + fmt(agreement) +
             ", " + fmt(elapsed) + " s");
}

// --- criterion 3: gradient fidelity ------------------------------------------

void criterion_gradients() {
  Rng rng(1003);
  double worst = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    FeatureConfig fcfg;
    fcfg.dim = 6 + static_cast<std::uint32_t>(rng.below(27));
    StudentModel m = StudentModel::zeros(fcfg, 0.0);
    for (auto& w : m.weights) w = rng.uniform() * 2.0 - 1.0;
    m.bias = rng.uniform() - 0.5;
    auto ex_data = testutil::random_labeled(1, rng);
    TrainExample ex{featurize(ex_data[0].triple, fcfg),
                    static_cast<double>(ex_data[0].label)};
    auto g = loss_gradient(m, ex);
    const double h = 1e-6;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto value = [&](double delta) {
        StudentModel probe = m;
        if (i < probe.weights.size())
          probe.weights[i] += delta;
        else
          probe.bias += delta;
        return ce_loss(probe.margin(ex.phi), ex.target);
      };
      double fd = (value(h) - value(-h)) / (2.0 * h);
      double denom = std::max({std::abs(g[i]), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(g[i] - fd) / denom);
    }
  }
  record(3, "gradient fidelity", worst < 1e-4, "max rel err " + fmt(worst));
}

// --- criterion 4: AUC exactness ----------------------------------------------

double pairwise_auc(const std::vector<ScoredLabel>& scored) {
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

void criterion_auc() {
  Rng rng(1004);
  double worst = 0.0;
  int instances = 0;
  while (instances < 100) {
    std::size_t n = 2 + rng.below(999);
    std::vector<ScoredLabel> scored;
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      double score = static_cast<double>(rng.below(25)) / 8.0;  // many ties
      int label = static_cast<int>(rng.below(2));
      (label ? pos : neg) = true;
      scored.push_back({score, label});
    }
    if (!pos || !neg) continue;
    worst = std::max(worst, std::abs(auc(scored) - pairwise_auc(scored)));
    ++instances;
  }
  record(4, "auc exactness vs pairwise oracle", worst <= 1e-12,
         "max abs diff " + fmt(worst * 1e12) + "e-12");
}

// --- criteria 5 through 8 share one pipeline run -----------------------------

struct FixtureRun {
  std::string data_dir;
  std::string out_dir;
  RunResult result;
  double elapsed = 0.0;
};

FixtureRun run_standard_fixture() {
  FixtureRun fr;
  fr.data_dir = fresh_dir("fixture_data");
  save_dataset(BundlePaths::in_dir(fr.data_dir),
               generate_synthetic(standard_spec()));
  fr.out_dir = fresh_dir("fixture_out");
  auto start = Clock::now();
  fr.result = run_pipeline(standard_config(fr.data_dir, fr.out_dir));
  fr.elapsed = seconds_since(start);
  return fr;
}

double split_auc(const EvalReport& report, const std::string& name) {
  auto it = report.auc_per_split.find(name);
  return it == report.auc_per_split.end() ? 0.0 : it->second;
}

double report_ood(const std::string& eval_tsv) {
  std::ifstream in(eval_tsv);
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_tabs(line);
    if (fields.size() == 3 && fields[0] == "auc" && fields[1] == "ood")
      return std::strtod(fields[2].c_str(), nullptr);
  }
  throw std::runtime_error("no ood auc in " + eval_tsv);
}

void criterion_end_to_end(const FixtureRun& fr) {
  double supervised_all = fr.result.eval_supervised.auc_all;
  double final_all = fr.result.eval_final.auc_all;
  double delta_all = final_all - supervised_all;

  double in_delta =
      split_auc(fr.result.eval_final, "original_test") -
      split_auc(fr.result.eval_supervised, "original_test");
  double ood_delta = report_ood(fr.out_dir + "/eval_final.tsv") -
                     report_ood(fr.out_dir + "/eval_supervised.tsv");

  bool pass = delta_all >= 0.02 && ood_delta >= in_delta &&
              fr.elapsed < 300.0;
  record(5, "end-to-end directional claim", pass,
         "d_all " + fmt(delta_all) + ", d_in " + fmt(in_delta) + ", d_ood " +
             fmt(ood_delta) + ", " + fmt(fr.elapsed) + " s");
}

void criterion_filter_chain(const FixtureRun& fr) {
  auto pseudo = read_pseudo(fr.out_dir + "/pseudo.tsv");
  StudentModel supervised =
      load_student(fr.out_dir + "/student_supervised.model");

  std::size_t no_filter = pseudo.size();
  std::size_t influence_only =
      read_pseudo(fr.out_dir + "/pseudo_kept_influence.tsv").size();
  std::size_t student_only = filter_by_student(pseudo, supervised).size();
  std::size_t both = fr.result.n_finetune;

  bool shape = both <= std::min(influence_only, student_only) &&
               std::max(influence_only, student_only) <= no_filter;
  bool strict = influence_only < no_filter && student_only < no_filter;
  record(6, "filter-chain shape", shape && strict,
         "none " + std::to_string(no_filter) + " -> influence " +
             std::to_string(influence_only) + " / student " +
             std::to_string(student_only) + " -> both " +
             std::to_string(both));
}

void criterion_balancing(const FixtureRun& fr) {
  // Rebuild the unbalanced pseudo set from the score artifact, then check
  // the balanced artifact hits min(labeled count, supply) per class.
  auto scored = read_scores(fr.out_dir + "/scores.tsv");
  std::vector<double> values;
  for (const auto& st : scored) values.push_back(st.score);
  PipelineConfig cfg = standard_config(fr.data_dir, fr.out_dir);
  ThresholdBands bands = quantile_bands(values, cfg.q_neg_min, cfg.q_neg_max,
                                        cfg.q_pos_min, cfg.q_pos_max);
  auto unbalanced = assign_pseudo_labels(scored, bands);
  auto balanced = read_pseudo(fr.out_dir + "/pseudo.tsv");
  auto labeled = read_labeled(fr.out_dir + "/labeled_train.tsv");

  std::map<std::pair<Relation, int>, std::size_t> supply, target, got;
  for (const auto& p : unbalanced) ++supply[{p.triple.relation, p.pseudo_label}];
  for (const auto& ex : labeled) ++target[{ex.triple.relation, ex.label}];
  for (const auto& p : balanced) ++got[{p.triple.relation, p.pseudo_label}];

  bool pass = true;
  std::string detail;
  for (const auto& [key, sup] : supply) {
    std::size_t want = std::min(sup, target[key]);
    std::size_t have = got.count(key) ? got.at(key) : 0;
    if (have != want) {
      pass = false;
      detail = std::string(relation_name(key.first)) + "/" +
               std::to_string(key.second) + " got " + std::to_string(have) +
               " want " + std::to_string(want);
      break;
    }
  }
  for (const auto& [key, have] : got)
    if (!supply.count(key)) pass = false;
  if (pass)
    detail = std::to_string(got.size()) + " relation/label classes exact";
  record(7, "per-relation balancing", pass, detail);
}

void criterion_diversity(const FixtureRun& fr) {
  bool hand = std::abs(ngram_diversity({{"a", "b", "a", "b"}}, 1) - 0.5) <
                  1e-15 &&
              std::abs(ngram_diversity({{"a", "b", "a"}, {"a", "b"}}, 2) -
                       2.0 / 3.0) < 1e-15;

  std::vector<Tokens> labeled_corpus;
  for (const auto& row : read_triple_rows(fr.data_dir + "/labeled.tsv"))
    labeled_corpus.push_back(serialize_triple(row.triple));
  std::vector<Tokens> filtered_corpus;
  for (const auto& p : read_pseudo(fr.out_dir + "/pseudo_kept_student.tsv"))
    filtered_corpus.push_back(serialize_triple(p.triple));

  double labeled_div = ngram_diversity(labeled_corpus, 1);
  double filtered_div = ngram_diversity(filtered_corpus, 1);
  bool pass = hand && filtered_div > labeled_div;
  record(8, "diversity metric", pass,
         "labeled " + fmt(labeled_div) + " < filtered " + fmt(filtered_div));
}

// --- criterion 9: baseline degeneracies --------------------------------------

void criterion_baseline_degeneracies() {
  Rng rng(1009);
  auto labeled = testutil::random_labeled(300, rng);
  std::vector<Triple> unlabeled;
  for (const auto& ex : testutil::random_labeled(300, rng))
    unlabeled.push_back(ex.triple);

  FeatureConfig fcfg;
  fcfg.dim = 1u << 13;
  TrainConfig tcfg;
  tcfg.epochs = 20;
  tcfg.seed = 77;

  StudentModel supervised = train_student(labeled, tcfg, fcfg);

  UdaConfig ucfg;
  ucfg.lambda = 0.0;
  ucfg.seed = 5;
  StudentModel uda0 = uda_train(labeled, unlabeled, ucfg, tcfg, fcfg);

  NoiseConfig noise;
  noise.iterations = 0;
  StudentModel ns0 =
      noisy_student_iterate(labeled, unlabeled, noise, tcfg, fcfg);

  bool uda_same = uda0.weights == supervised.weights &&
                  uda0.bias == supervised.bias;
  bool ns_same = ns0.weights == supervised.weights &&
                 ns0.bias == supervised.bias;
  record(9, "baseline degeneracies", uda_same && ns_same,
         std::string("uda(lambda=0) ") + (uda_same ? "identical" : "differs") +
             ", noisy-student(iters=0) " + (ns_same ? "identical" : "differs"));
}

// --- criterion 10: determinism of full runs ----------------------------------

bool dirs_identical(const std::string& a, const std::string& b,
                    std::string& first_diff) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a))
    names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b))
    names.insert(e.path().filename().string());
  for (const auto& name : names) {
    std::string pa = a + "/" + name, pb = b + "/" + name;
    if (!fs::exists(pa) || !fs::exists(pb)) {
      first_diff = name + " missing on one side";
      return false;
    }
    if (read_file(pa) != read_file(pb)) {
      first_diff = name;
      return false;
    }
  }
  return true;
}

void criterion_determinism(const std::string& cli, const std::string& data_dir) {
  std::string out_a = fresh_dir("det_run_a");
  std::string out_b = fresh_dir("det_run_b");
  bool ran_cli = false;
  if (!cli.empty()) {
    std::string conf = fresh_dir("det_conf") + "/run.conf";
    write_standard_config_file(conf, data_dir, out_a);
    std::string cmd_a = cli + " run --config " + conf + " --seed 424242" +
                        " --output.dir " + out_a + " > /dev/null";
    std::string cmd_b = cli + " run --config " + conf + " --seed 424242" +
                        " --output.dir " + out_b + " > /dev/null";
    ran_cli = std::system(cmd_a.c_str()) == 0 &&
              std::system(cmd_b.c_str()) == 0;
  }
  if (!ran_cli) {
    run_pipeline(standard_config(data_dir, out_a));
    run_pipeline(standard_config(data_dir, out_b));
  }
  std::string diff;
  bool same = dirs_identical(out_a, out_b, diff);
  record(10, "byte-identical repeated runs", same,
         same ? (ran_cli ? "via CLI" : "in-process")
              : ("first difference: " + diff));
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = argc > 1 ? argv[1] : "";
  try {
    criterion_lissa();
    criterion_influence_oracle();
    criterion_gradients();
    criterion_auc();
    FixtureRun fixture = run_standard_fixture();
    criterion_end_to_end(fixture);
    criterion_filter_chain(fixture);
    criterion_balancing(fixture);
    criterion_diversity(fixture);
    criterion_baseline_degeneracies();
    criterion_determinism(cli, fixture.data_dir);
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  int failed = 0;
  for (const auto& r : g_results)
    if (!r.pass) ++failed;
  std::printf("%zu criteria, %d failed\n", g_results.size(), failed);
  return failed == 0 ? 0 : 1;
}
