#pragma once
// File formats: triple/score/pseudo-label/influence TSVs, model files, and
// evaluation reports. All writers are byte-deterministic: fixed float
// formatting, sorted iteration, newline endings.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgpop/dataset.hpp"
#include "kgpop/eval.hpp"
#include "kgpop/influence.hpp"
#include "kgpop/pseudo.hpp"
#include "kgpop/student.hpp"
#include "kgpop/teacher.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

inline std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline std::string fmt_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  return in;
}

inline std::invalid_argument parse_error(const std::string& path,
                                         std::size_t line_no,
                                         const std::string& what) {
  return std::invalid_argument(path + ":" + std::to_string(line_no) + ": " +
                               what);
}

// --- triple TSV -------------------------------------------------------------
// head<TAB>relation<TAB>tail[<TAB>label[<TAB>split]]; '#' lines are comments.

struct TripleRow {
  Triple triple;
  std::optional<int> label;
  std::optional<std::string> split;  // trn | dev | tst
};

inline std::vector<TripleRow> read_triple_rows(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<TripleRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 5)
      throw parse_error(path, line_no, "expected 3 to 5 tab-separated fields");
    TripleRow row;
    auto rel = try_parse_relation(fields[1]);
    if (!rel)
      throw parse_error(path, line_no, "unknown relation '" + fields[1] + "'");
    row.triple = {fields[0], *rel, fields[2]};
    if (tokenize(fields[0]).empty())
      throw parse_error(path, line_no, "head has no tokens");
    if (tokenize(fields[2]).empty())
      throw parse_error(path, line_no, "tail has no tokens");
    if (fields.size() >= 4 && !fields[3].empty()) {
      if (fields[3] != "0" && fields[3] != "1")
        throw parse_error(path, line_no, "label must be 0 or 1");
      row.label = fields[3] == "1" ? 1 : 0;
    }
    if (fields.size() == 5 && !fields[4].empty()) {
      if (fields[4] != "trn" && fields[4] != "dev" && fields[4] != "tst")
        throw parse_error(path, line_no, "split must be trn, dev or tst");
      row.split = fields[4];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_triple_rows(const std::string& path,
                              const std::vector<TripleRow>& rows) {
  std::ofstream out = open_out(path);
  for (const auto& row : rows) {
    out << row.triple.head << '\t' << relation_name(row.triple.relation)
        << '\t' << row.triple.tail;
    if (row.label) out << '\t' << *row.label;
    if (row.split) {
      if (!row.label) out << '\t';  // keep the column positions fixed
      out << '\t' << *row.split;
    }
    out << '\n';
  }
}

inline std::vector<LabeledExample> read_labeled(const std::string& path) {
  std::vector<LabeledExample> out;
  std::size_t line_no = 0;
  for (const auto& row : read_triple_rows(path)) {
    ++line_no;
    if (!row.label)
      throw std::invalid_argument(path + ": row " + std::to_string(line_no) +
                                  " is missing a label");
    out.push_back({row.triple, *row.label});
  }
  return out;
}

inline std::vector<Triple> read_unlabeled(const std::string& path) {
  std::vector<Triple> out;
  for (const auto& row : read_triple_rows(path)) out.push_back(row.triple);
  return out;
}

inline void write_labeled(const std::string& path,
                          const std::vector<LabeledExample>& data) {
  std::vector<TripleRow> rows;
  rows.reserve(data.size());
  for (const auto& ex : data) rows.push_back({ex.triple, ex.label, {}});
  write_triple_rows(path, rows);
}

inline void write_unlabeled(const std::string& path,
                            const std::vector<Triple>& data) {
  std::vector<TripleRow> rows;
  rows.reserve(data.size());
  for (const auto& t : data) rows.push_back({t, {}, {}});
  write_triple_rows(path, rows);
}

// --- score TSV --------------------------------------------------------------
// head<TAB>relation<TAB>tail<TAB>score, six decimal places.

inline void write_scores(const std::string& path,
                         const std::vector<ScoredTriple>& scored) {
  std::ofstream out = open_out(path);
  for (const auto& st : scored)
    out << st.triple.head << '\t' << relation_name(st.triple.relation) << '\t'
        << st.triple.tail << '\t' << fmt6(st.score) << '\n';
}

inline std::vector<ScoredTriple> read_scores(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<ScoredTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw parse_error(path, line_no, "expected 4 tab-separated fields");
    auto rel = try_parse_relation(fields[1]);
    if (!rel)
      throw parse_error(path, line_no, "unknown relation '" + fields[1] + "'");
    char* end = nullptr;
    double score = std::strtod(fields[3].c_str(), &end);
    if (end == fields[3].c_str() || *end != '\0')
      throw parse_error(path, line_no, "bad score '" + fields[3] + "'");
    out.push_back({{fields[0], *rel, fields[2]}, score});
  }
  return out;
}

// --- pseudo-label TSV -------------------------------------------------------
// head<TAB>relation<TAB>tail<TAB>pseudo_label<TAB>teacher_score[<TAB>prov].

inline void write_pseudo(const std::string& path,
                         const std::vector<PseudoExample>& pseudo,
                         bool with_provenance = false) {
  std::ofstream out = open_out(path);
  for (const auto& p : pseudo) {
    out << p.triple.head << '\t' << relation_name(p.triple.relation) << '\t'
        << p.triple.tail << '\t' << p.pseudo_label << '\t'
        << fmt6(p.teacher_score);
    if (with_provenance) out << '\t' << p.provenance;
    out << '\n';
  }
}

inline std::vector<PseudoExample> read_pseudo(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<PseudoExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 5 && fields.size() != 6)
      throw parse_error(path, line_no, "expected 5 or 6 tab-separated fields");
    auto rel = try_parse_relation(fields[1]);
    if (!rel)
      throw parse_error(path, line_no, "unknown relation '" + fields[1] + "'");
    if (fields[3] != "0" && fields[3] != "1")
      throw parse_error(path, line_no, "pseudo label must be 0 or 1");
    PseudoExample p;
    p.triple = {fields[0], *rel, fields[2]};
    p.pseudo_label = fields[3] == "1" ? 1 : 0;
    p.teacher_score = std::strtod(fields[4].c_str(), nullptr);
    if (fields.size() == 6) p.provenance = fields[5];
    out.push_back(std::move(p));
  }
  return out;
}

// --- influence report TSV ---------------------------------------------------
// head rel tail pseudo_label influence harm kept

inline void write_influence_report(const std::string& path,
                                   const InfluenceReport& report) {
  std::ofstream out = open_out(path);
  char buf[64];
  for (const auto& rec : report.records) {
    std::snprintf(buf, sizeof buf, "%.9g", rec.influence);
    std::string infl = buf;
    std::snprintf(buf, sizeof buf, "%.9g", rec.harm);
    std::string harm = buf;
    out << rec.example.triple.head << '\t'
        << relation_name(rec.example.triple.relation) << '\t'
        << rec.example.triple.tail << '\t' << rec.example.pseudo_label << '\t'
        << infl << '\t' << harm << '\t' << (rec.kept ? 1 : 0) << '\n';
  }
}

// --- model files ------------------------------------------------------------

inline void save_student(const std::string& path, const StudentModel& m) {
  std::ofstream out = open_out(path);
  out << "kgpop-student\t1\n";
  out << "dim\t" << m.features.dim << '\n';
  out << "orders\t";
  for (std::size_t i = 0; i < m.features.orders.size(); ++i) {
    if (i) out << ',';
    out << m.features.orders[i];
  }
  out << '\n';
  out << "hash_seed\t" << m.features.hash_seed << '\n';
  out << "l2\t" << fmt_exact(m.l2) << '\n';
  out << "bias\t" << fmt_exact(m.bias) << '\n';
  for (std::size_t i = 0; i < m.weights.size(); ++i)
    if (m.weights[i] != 0.0)
      out << "w\t" << i << '\t' << fmt_exact(m.weights[i]) << '\n';
}

inline StudentModel load_student(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_tabs(line)[0] != "kgpop-student")
    throw std::invalid_argument(path + ": not a student model file");
  StudentModel m;
  FeatureConfig cfg;
  cfg.orders.clear();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    const std::string& key = fields[0];
    if (key == "dim") {
      cfg.dim = static_cast<std::uint32_t>(std::stoul(fields[1]));
    } else if (key == "orders") {
      std::stringstream ss(fields[1]);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.orders.push_back(std::stoi(tok));
    } else if (key == "hash_seed") {
      cfg.hash_seed = std::stoull(fields[1]);
    } else if (key == "l2") {
      m.l2 = std::strtod(fields[1].c_str(), nullptr);
    } else if (key == "bias") {
      m.bias = std::strtod(fields[1].c_str(), nullptr);
    } else if (key == "w") {
      if (m.weights.empty()) m.weights.assign(cfg.dim, 0.0);
      std::size_t idx = std::stoul(fields[1]);
      if (idx >= cfg.dim)
        throw parse_error(path, line_no, "weight index out of range");
      m.weights[idx] = std::strtod(fields[2].c_str(), nullptr);
    } else {
      throw parse_error(path, line_no, "unknown record '" + key + "'");
    }
  }
  if (m.weights.empty()) m.weights.assign(cfg.dim, 0.0);
  m.features = cfg;
  return m;
}

inline void save_teacher(const std::string& path, const NgramTeacher& t) {
  std::ofstream out = open_out(path);
  out << "kgpop-teacher\t1\n";
  out << "order\t" << t.order() << '\n';
  out << "k\t" << fmt_exact(t.smoothing_k()) << '\n';
  for (const auto& tok : t.vocabulary()) out << "v\t" << tok << '\n';
  for (const auto& [ctx, tok, count] : t.sorted_counts())
    out << "c\t" << ctx << '\t' << tok << '\t' << count << '\n';
}

inline NgramTeacher load_teacher(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_tabs(line)[0] != "kgpop-teacher")
    throw std::invalid_argument(path + ": not a teacher model file");
  int order = 0;
  double k = 0.0;
  std::vector<std::string> vocab;
  std::vector<std::array<std::string, 3>> counts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    const std::string& key = fields[0];
    if (key == "order") {
      order = std::stoi(fields[1]);
    } else if (key == "k") {
      k = std::strtod(fields[1].c_str(), nullptr);
    } else if (key == "v") {
      vocab.push_back(fields[1]);
    } else if (key == "c") {
      if (fields.size() != 4)
        throw parse_error(path, line_no, "count record needs 4 fields");
      counts.push_back({fields[1], fields[2], fields[3]});
    } else {
      throw parse_error(path, line_no, "unknown record '" + key + "'");
    }
  }
  NgramTeacher t(order, k);
  for (const auto& tok : vocab) t.add_vocab(tok);
  for (const auto& [ctx, tok, cnt] : counts)
    t.add_count(ctx, tok, std::stoll(cnt));
  return t;
}

// --- evaluation report ------------------------------------------------------

inline void write_eval_report_tsv(const std::string& path,
                                  const EvalReport& report) {
  std::ofstream out = open_out(path);
  out << "auc\tall\t" << fmt6(report.auc_all) << '\n';
  for (const auto& [name, value] : report.auc_per_split)
    out << "auc\t" << name << '\t' << fmt6(value) << '\n';
  for (const auto& [name, count] : report.counts)
    out << "count\t" << name << '\t' << count << '\n';
  for (const auto& name : report.degenerate)
    out << "degenerate\t" << name << "\t1\n";
}

inline void write_eval_report_txt(const std::string& path,
                                  const EvalReport& report) {
  std::ofstream out = open_out(path);
  out << "auc.all = " << fmt6(report.auc_all) << '\n';
  for (const auto& [name, value] : report.auc_per_split)
    out << "auc." << name << " = " << fmt6(value) << '\n';
  for (const auto& [name, count] : report.counts)
    out << "count." << name << " = " << count << '\n';
  for (const auto& name : report.degenerate)
    out << "degenerate." << name << " = 1\n";
}

// --- dataset bundle directory -----------------------------------------------

struct BundlePaths {
  std::string labeled;
  std::string unlabeled;
  std::map<std::string, std::string> eval_files;

  static BundlePaths in_dir(const std::string& dir) {
    BundlePaths p;
    p.labeled = dir + "/labeled.tsv";
    p.unlabeled = dir + "/unlabeled.tsv";
    for (const auto& name : eval_split_names())
      p.eval_files[name] = dir + "/eval_" + name + ".tsv";
    return p;
  }
};

inline DatasetBundle load_dataset(const BundlePaths& paths) {
  DatasetBundle b;
  for (const auto& row : read_triple_rows(paths.labeled)) {
    if (!row.label)
      throw std::invalid_argument(paths.labeled +
                                  ": labeled file has a row without a label");
    if (*row.label == 1)
      b.labeled_pos.push_back(row.triple);
    else
      b.labeled_neg.push_back({row.triple, 0});
  }
  b.unlabeled = read_unlabeled(paths.unlabeled);
  for (const auto& [name, path] : paths.eval_files)
    b.eval_splits[name] = read_labeled(path);
  b.validate();
  return b;
}

inline void save_dataset(const BundlePaths& paths, const DatasetBundle& b) {
  write_labeled(paths.labeled, b.labeled());
  write_unlabeled(paths.unlabeled, b.unlabeled);
  for (const auto& [name, split] : b.eval_splits) {
    auto it = paths.eval_files.find(name);
    if (it == paths.eval_files.end())
      throw std::invalid_argument("save_dataset: no path for split " + name);
    write_labeled(it->second, split);
  }
}

}  // namespace kgpop
