#pragma once
// Discriminative student: logistic regression over hashed n-gram features of
// the serialized triple, trained by mini-batch gradient descent on mean
// cross-entropy plus an L2 penalty on the weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kgpop/features.hpp"
#include "kgpop/rng.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

inline double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  double e = std::exp(m);
  return e / (1.0 + e);
}

// ln(1 + e^m) without overflow.
inline double softplus(double m) {
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

// Cross-entropy of a (possibly soft) target against sigmoid(margin).
inline double ce_loss(double margin, double target) {
  return softplus(margin) - target * margin;
}

struct StudentModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 0.0;
  FeatureConfig features;

  static StudentModel zeros(const FeatureConfig& cfg, double l2_reg) {
    StudentModel m;
    m.weights.assign(cfg.dim, 0.0);
    m.l2 = l2_reg;
    m.features = cfg;
    return m;
  }

  double margin(const FeatureVector& fv) const {
    return sparse_dot(fv, weights) + bias;
  }
  double predict(const FeatureVector& fv) const { return sigmoid(margin(fv)); }
  double predict_tokens(const Tokens& toks) const {
    return predict(featurize(toks, features));
  }
  double predict(const Triple& t) const {
    return predict_tokens(serialize_triple(t));
  }
};

inline double student_predict(const StudentModel& m, const Triple& t) {
  return m.predict(t);
}

struct TrainConfig {
  double learning_rate = 0.2;
  int epochs = 40;
  double l2 = 1e-4;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

// A featurized training point; target may be soft (in [0, 1]).
struct TrainExample {
  FeatureVector phi;
  double target = 0.0;
};

inline std::vector<TrainExample> prepare_examples(
    const std::vector<LabeledExample>& data, const FeatureConfig& cfg) {
  std::vector<TrainExample> out;
  out.reserve(data.size());
  for (const auto& ex : data)
    out.push_back({featurize(ex.triple, cfg), static_cast<double>(ex.label)});
  return out;
}

// Called once per batch with the pre-update model; adds extra gradient terms.
using BatchHook = std::function<void(const StudentModel& current,
                                     std::vector<double>& grad_w,
                                     double& grad_b)>;

// Shared optimization core. Supervised training, consistency training and
// noised self-training all run through here so that degenerate configurations
// collapse to bit-identical runs.
inline StudentModel train_core(const std::vector<TrainExample>& data,
                               const TrainConfig& cfg,
                               const FeatureConfig& fcfg,
                               const StudentModel* init, double dropout_p,
                               const BatchHook& hook) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epochs");

  StudentModel model = init ? *init : StudentModel::zeros(fcfg, cfg.l2);
  model.l2 = cfg.l2;
  const std::size_t d = model.weights.size();

  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  Rng shuffle_rng(derive_seed(cfg.seed, "train.shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "train.dropout"));

  std::vector<double> grad_w(d, 0.0);
  FeatureVector noised;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(idx);
    for (std::size_t start = 0; start < idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(idx.size(),
                                 start + static_cast<std::size_t>(cfg.batch_size));
      double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        const TrainExample& ex = data[idx[j]];
        const FeatureVector* phi = &ex.phi;
        if (dropout_p > 0.0) {
          noised.dim = ex.phi.dim;
          noised.entries.clear();
          for (const auto& e : ex.phi.entries)
            if (!dropout_rng.bernoulli(dropout_p)) noised.entries.push_back(e);
          phi = &noised;
        }
        double err = (sigmoid(model.margin(*phi)) - ex.target) * inv;
        for (const auto& [i, w] : phi->entries) grad_w[i] += err * w;
        grad_b += err;
      }
      if (hook) hook(model, grad_w, grad_b);
      for (std::size_t i = 0; i < d; ++i)
        model.weights[i] -= cfg.learning_rate * (grad_w[i] + cfg.l2 * model.weights[i]);
      model.bias -= cfg.learning_rate * grad_b;
    }
  }
  return model;
}

inline StudentModel train_student(const std::vector<LabeledExample>& data,
                                  const TrainConfig& cfg,
                                  const FeatureConfig& fcfg = {},
                                  const StudentModel* init = nullptr) {
  if (data.empty()) throw std::invalid_argument("train_student: empty dataset");
  if (!init) {
    bool has_pos = false, has_neg = false;
    for (const auto& ex : data) (ex.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
      throw std::invalid_argument(
          "train_student: need both labels unless an initial model is given");
  }
  const FeatureConfig& cfg_used = init ? init->features : fcfg;
  return train_core(prepare_examples(data, cfg_used), cfg, cfg_used, init, 0.0,
                    nullptr);
}

// --- losses and gradients -------------------------------------------------

inline double mean_ce_loss(const StudentModel& model,
                           const std::vector<TrainExample>& data) {
  if (data.empty()) throw std::invalid_argument("mean_ce_loss: empty dataset");
  double s = 0.0;
  for (const auto& ex : data) s += ce_loss(model.margin(ex.phi), ex.target);
  return s / static_cast<double>(data.size());
}

inline double mean_ce_loss(const StudentModel& model,
                           const std::vector<LabeledExample>& data) {
  return mean_ce_loss(model, prepare_examples(data, model.features));
}

// Training objective: mean cross-entropy plus (l2/2)*||w||^2.
inline double objective_value(const StudentModel& model,
                              const std::vector<TrainExample>& data) {
  double reg = 0.0;
  for (double w : model.weights) reg += w * w;
  return mean_ce_loss(model, data) + 0.5 * model.l2 * reg;
}

// Per-example cross-entropy gradient, length d+1 (weights then bias).
// The regularizer belongs to the dataset objective, not to a single example.
inline std::vector<double> loss_gradient(const StudentModel& model,
                                         const TrainExample& ex) {
  std::vector<double> g(model.weights.size() + 1, 0.0);
  double err = sigmoid(model.margin(ex.phi)) - ex.target;
  for (const auto& [i, w] : ex.phi.entries) g[i] = err * w;
  g.back() = err;
  return g;
}

inline std::vector<double> loss_gradient(const StudentModel& model,
                                         const LabeledExample& ex) {
  return loss_gradient(
      model, TrainExample{featurize(ex.triple, model.features),
                          static_cast<double>(ex.label)});
}

// Mean of per-example gradients; no regularizer term.
inline std::vector<double> mean_loss_gradient(
    const StudentModel& model, const std::vector<TrainExample>& data) {
  if (data.empty())
    throw std::invalid_argument("mean_loss_gradient: empty dataset");
  std::vector<double> g(model.weights.size() + 1, 0.0);
  double inv = 1.0 / static_cast<double>(data.size());
  for (const auto& ex : data) {
    double err = (sigmoid(model.margin(ex.phi)) - ex.target) * inv;
    for (const auto& [i, w] : ex.phi.entries) g[i] += err * w;
    g.back() += err;
  }
  return g;
}

// Gradient of the training objective: mean gradient plus l2 on the weights.
inline std::vector<double> objective_gradient(
    const StudentModel& model, const std::vector<TrainExample>& data) {
  std::vector<double> g = mean_loss_gradient(model, data);
  for (std::size_t i = 0; i < model.weights.size(); ++i)
    g[i] += model.l2 * model.weights[i];
  return g;
}

}  // namespace kgpop
