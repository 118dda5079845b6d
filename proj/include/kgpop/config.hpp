#pragma once
// Line-oriented key = value configuration with [section] headers. Every key
// lives in a registry with a default and help text; the CLI generates one
// override flag per key from the same registry.

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgpop {

struct ConfigKey {
  std::string name;  // section.key
  std::string default_value;
  std::string help;
};

inline const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"data.dir", "", "dataset directory (labeled/unlabeled/eval TSVs)"},
      {"data.scores", "", "external score TSV used when teacher.kind=external"},
      {"output.dir", "out", "artifact output directory"},
      {"teacher.kind", "ngram", "ngram | external | student"},
      {"teacher.order", "3", "n-gram order of the builtin teacher"},
      {"teacher.k", "0.1", "add-k smoothing constant"},
      {"student.dim", "262144", "feature hashing range"},
      {"student.orders", "1,2", "n-gram orders of the student features"},
      {"student.hash_seed", "1802201137", "feature hash seed"},
      {"student.lr", "0.2", "supervised learning rate"},
      {"student.epochs", "40", "supervised epochs"},
      {"student.l2", "0.0001", "L2 regularization strength"},
      {"student.batch", "32", "mini-batch size"},
      {"finetune.lr", "0.1", "finetune learning rate"},
      {"finetune.epochs", "15", "finetune epochs"},
      {"finetune.mix_labeled", "off", "mix labeled data into the finetune set"},
      {"bands.mode", "absolute", "absolute | quantile"},
      {"bands.neg_min", "-4.0", "negative band lower threshold"},
      {"bands.neg_max", "-3.7", "negative band upper threshold"},
      {"bands.pos_min", "-2.8", "positive band lower threshold"},
      {"bands.pos_max", "-2.0", "positive band upper threshold"},
      {"bands.q_neg_min", "0.02", "quantile for the negative band lower edge"},
      {"bands.q_neg_max", "0.40", "quantile for the negative band upper edge"},
      {"bands.q_pos_min", "0.60", "quantile for the positive band lower edge"},
      {"bands.q_pos_max", "0.98", "quantile for the positive band upper edge"},
      {"filters.influence", "on", "apply the influence filter"},
      {"filters.student", "on", "apply the student-probability filter"},
      {"filters.order", "influence-first", "influence-first | student-first"},
      {"filters.optimality_tol", "0",
       "require ||grad J|| below this before influence filtering (0 = skip)"},
      {"lissa.depth", "1000", "LiSSA recursion depth"},
      {"lissa.damping", "0.01", "Hessian damping"},
      {"lissa.scale", "25", "LiSSA scale"},
      {"lissa.repeats", "2", "independent LiSSA repeats"},
      {"lissa.batch", "0", "stochastic batch size (0 = auto)"},
      {"pipeline.balance", "on", "balance pseudo counts per relation"},
      {"pipeline.split", "0.8,0.1,0.1", "train/dev/test fractions"},
      {"pipeline.seed", "0", "root seed; the run command requires --seed"},
  };
  return keys;
}

class KvConfig {
 public:
  KvConfig() {
    for (const auto& key : config_registry())
      values_[key.name] = key.default_value;
  }

  static KvConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    KvConfig cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[' && s.back() == ']') {
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": expected key = value");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (!section.empty()) key = section + "." + key;
      cfg.set(key, value);
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key))
      throw std::invalid_argument("unknown config key: " + key);
    values_[key] = value;
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::invalid_argument("unknown config key: " + key);
    return it->second;
  }

  double num(const std::string& key) const {
    const std::string& v = str(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw std::invalid_argument("config " + key + ": bad number '" + v + "'");
    return x;
  }

  long long integer(const std::string& key) const {
    const std::string& v = str(key);
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw std::invalid_argument("config " + key + ": bad integer '" + v +
                                  "'");
    return x;
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& v = str(key);
    char* end = nullptr;
    std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw std::invalid_argument("config " + key + ": bad integer '" + v +
                                  "'");
    return x;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config " + key + ": bad boolean '" + v + "'");
  }

  std::vector<double> num_list(const std::string& key) const {
    std::vector<double> out;
    const std::string& v = str(key);
    std::size_t start = 0;
    while (start <= v.size()) {
      std::size_t comma = v.find(',', start);
      std::string part = trim(
          comma == std::string::npos ? v.substr(start)
                                     : v.substr(start, comma - start));
      if (!part.empty()) {
        char* end = nullptr;
        out.push_back(std::strtod(part.c_str(), &end));
        if (end == part.c_str() || *end != '\0')
          throw std::invalid_argument("config " + key + ": bad number '" +
                                      part + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace kgpop
