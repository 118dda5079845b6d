#pragma once
// Influence-function machinery for the logistic student: Hessian-vector
// products, LiSSA inverse-HVP, the upweighting influence estimator, an exact
// leave-one-out retraining oracle, and the two pseudo-label filters.
//
// Parameter vectors have length d+1: weights first, bias last. The Hessian of
// the training objective is (1/n) sum p(1-p) phi~ phi~^T + l2 on the weight
// block, with phi~ the feature vector extended by 1 for the bias.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgpop/pseudo.hpp"
#include "kgpop/rng.hpp"
#include "kgpop/student.hpp"

namespace kgpop {

struct LissaConfig {
  int depth = 1000;       // recursion steps
  double damping = 0.01;  // added to the Hessian diagonal
  double scale = 25.0;    // must dominate the damped Hessian spectral norm
  int repeats = 2;        // independent estimates averaged
  int batch = 0;          // examples per stochastic draw; <=0 selects
                          // full batch for n <= 10^4, else 1024
  std::uint64_t seed = 0;

  void validate() const {
    if (depth < 1) throw std::invalid_argument("lissa: depth must be >= 1");
    if (repeats < 1) throw std::invalid_argument("lissa: repeats must be >= 1");
    if (scale <= 0.0) throw std::invalid_argument("lissa: scale must be > 0");
    if (damping < 0.0) throw std::invalid_argument("lissa: damping must be >= 0");
  }
};

// Applies (H + damping*I) v without materializing H. Feature vectors and
// sigmoid curvatures are cached at construction.
class HessianOperator {
 public:
  HessianOperator(const StudentModel& model,
                  const std::vector<TrainExample>& data)
      : dim_(model.weights.size()), l2_(model.l2) {
    phis_.reserve(data.size());
    curvature_.reserve(data.size());
    for (const auto& ex : data) {
      double p = sigmoid(model.margin(ex.phi));
      phis_.push_back(&ex.phi);
      curvature_.push_back(p * (1.0 - p));
    }
  }

  std::size_t n() const { return phis_.size(); }
  std::size_t param_dim() const { return dim_ + 1; }

  std::vector<double> apply(const std::vector<double>& v,
                            double damping) const {
    return apply_subset(v, damping, nullptr);
  }

  // Restricting to a batch replaces the empirical mean over all examples by
  // the mean over the batch; the l2 and damping terms are unaffected.
  std::vector<double> apply_subset(
      const std::vector<double>& v, double damping,
      const std::vector<std::size_t>* subset) const {
    if (v.size() != param_dim())
      throw std::invalid_argument("hvp: dimension mismatch");
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = (l2_ + damping) * v[i];
    out[dim_] = damping * v[dim_];
    std::size_t count = subset ? subset->size() : phis_.size();
    if (count == 0) return out;
    double inv = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < count; ++j) {
      std::size_t i = subset ? (*subset)[j] : j;
      const FeatureVector& phi = *phis_[i];
      double s = v[dim_];  // phi~ . v, bias coordinate carries weight 1
      for (const auto& [k, w] : phi.entries) s += v[k] * w;
      double coef = curvature_[i] * s * inv;
      for (const auto& [k, w] : phi.entries) out[k] += coef * w;
      out[dim_] += coef;
    }
    return out;
  }

 private:
  std::size_t dim_;
  double l2_;
  std::vector<const FeatureVector*> phis_;
  std::vector<double> curvature_;
};

inline std::vector<double> hvp(const StudentModel& model,
                               const std::vector<TrainExample>& data,
                               const std::vector<double>& v, double damping) {
  return HessianOperator(model, data).apply(v, damping);
}

inline std::vector<double> hvp(const StudentModel& model,
                               const std::vector<LabeledExample>& data,
                               const std::vector<double>& v, double damping) {
  return hvp(model, prepare_examples(data, model.features), v, damping);
}

inline double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double vec_dot(const std::vector<double>& a,
                      const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Truncated Neumann-series estimate of (H + damping*I)^{-1} v:
//   h_0 = v,  h_j = v + (I - (H + damping*I)/scale) h_{j-1},
// returning h_depth / scale, averaged over independent stochastic repeats.
// Generic over the matrix-vector product so test fixtures can supply
// arbitrary SPD operators.
inline std::vector<double> lissa_inverse_hvp_op(
    const std::function<std::vector<double>(const std::vector<double>&,
                                            Rng* batch_rng)>& damped_hvp,
    const std::vector<double>& v, const LissaConfig& cfg) {
  cfg.validate();
  double vnorm = vec_norm(v);
  std::vector<double> acc(v.size(), 0.0);
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    Rng rng(derive_seed(cfg.seed, "lissa.rep" + std::to_string(rep)));
    std::vector<double> h = v;
    for (int step = 0; step < cfg.depth; ++step) {
      std::vector<double> hv = damped_hvp(h, &rng);
      for (std::size_t i = 0; i < h.size(); ++i)
        h[i] = v[i] + h[i] - hv[i] / cfg.scale;
      if (vec_norm(h) > 1e6 * vnorm)
        throw std::runtime_error(
            "lissa diverged: recursion norm exceeded 1e6 * ||v|| "
            "(scale too small for this Hessian)");
    }
    for (std::size_t i = 0; i < h.size(); ++i) acc[i] += h[i] / cfg.scale;
  }
  for (double& x : acc) x /= static_cast<double>(cfg.repeats);
  return acc;
}

inline std::vector<double> lissa_inverse_hvp(
    const StudentModel& model, const std::vector<TrainExample>& data,
    const std::vector<double>& v, const LissaConfig& cfg) {
  if (model.l2 <= 0.0 && cfg.damping <= 0.0)
    throw std::invalid_argument(
        "lissa: positive damping or l2 required for a definite Hessian");
  HessianOperator op(model, data);
  std::size_t n = op.n();
  std::size_t batch = cfg.batch > 0 ? static_cast<std::size_t>(cfg.batch)
                      : (n <= 10000 ? n : 1024);
  bool full = batch >= n;
  auto damped = [&](const std::vector<double>& x,
                    Rng* rng) -> std::vector<double> {
    if (full || n == 0) return op.apply(x, cfg.damping);
    std::vector<std::size_t> subset(batch);
    for (std::size_t i = 0; i < batch; ++i)
      subset[i] = static_cast<std::size_t>(rng->below(n));
    return op.apply_subset(x, cfg.damping, &subset);
  };
  return lissa_inverse_hvp_op(damped, v, cfg);
}

inline std::vector<double> lissa_inverse_hvp(
    const StudentModel& model, const std::vector<LabeledExample>& data,
    const std::vector<double>& v, const LissaConfig& cfg) {
  return lissa_inverse_hvp(model, prepare_examples(data, model.features), v,
                           cfg);
}

// Influence of upweighting a candidate training point z on validation loss:
//   I_up,loss(z) = -grad L(val)^T (H + damping*I)^{-1} grad L(z).
// The inverse-HVP against the validation gradient is computed once and
// reused for every probe, so per-example cost is a sparse dot product.
class InfluenceEngine {
 public:
  InfluenceEngine(const StudentModel& model,
                  const std::vector<TrainExample>& train,
                  const std::vector<TrainExample>& val,
                  const LissaConfig& cfg)
      : model_(model), n_train_(train.size()) {
    if (train.empty()) throw std::invalid_argument("influence: empty train");
    if (val.empty()) throw std::invalid_argument("influence: empty val");
    std::vector<double> g_val = mean_loss_gradient(model, val);
    s_val_ = lissa_inverse_hvp(model, train, g_val, cfg);
  }

  double influence(const TrainExample& z) const {
    double err = sigmoid(model_.margin(z.phi)) - z.target;
    double s = s_val_.back() * err;  // bias coordinate
    for (const auto& [i, w] : z.phi.entries) s += s_val_[i] * err * w;
    return -s;
  }

  double influence(const LabeledExample& z) const {
    return influence(TrainExample{featurize(z.triple, model_.features),
                                  static_cast<double>(z.label)});
  }

  // First-order estimate of L(val, theta*) - L(val, theta*_{-z}).
  double harm(const TrainExample& z) const {
    return influence(z) / static_cast<double>(n_train_);
  }

  std::size_t n_train() const { return n_train_; }

 private:
  const StudentModel& model_;
  std::size_t n_train_;
  std::vector<double> s_val_;
};

inline double influence_up_loss(const StudentModel& model,
                                const std::vector<LabeledExample>& train,
                                const std::vector<LabeledExample>& val,
                                const LabeledExample& z,
                                const LissaConfig& cfg) {
  InfluenceEngine engine(model, prepare_examples(train, model.features),
                         prepare_examples(val, model.features), cfg);
  return engine.influence(z);
}

// Retraining oracle for Eq.-style validation: the change in validation loss
// when z is dropped from the training set, with identical seeds and schedule.
inline double exact_loo_delta(const std::vector<LabeledExample>& train,
                              const std::vector<LabeledExample>& val,
                              const LabeledExample& z, const TrainConfig& cfg,
                              const FeatureConfig& fcfg = {}) {
  std::string zkey = triple_key(z.triple);
  std::vector<LabeledExample> rest;
  rest.reserve(train.size());
  bool removed = false;
  for (const auto& ex : train) {
    if (!removed && ex.label == z.label && triple_key(ex.triple) == zkey) {
      removed = true;
      continue;
    }
    rest.push_back(ex);
  }
  if (!removed)
    throw std::invalid_argument("exact_loo_delta: z is not in train");
  StudentModel full = train_student(train, cfg, fcfg);
  StudentModel loo = train_student(rest, cfg, fcfg);
  return mean_ce_loss(full, val) - mean_ce_loss(loo, val);
}

struct InfluenceRecord {
  PseudoExample example;
  double influence = 0.0;
  double harm = 0.0;
  bool kept = false;
};

struct InfluenceReport {
  std::vector<InfluenceRecord> records;
  std::size_t n_train = 0;
};

struct InfluenceFilterConfig {
  LissaConfig lissa;
  // When positive, require ||grad J(theta*)|| below this before filtering.
  double optimality_tol = 0.0;
};

// Keep a pseudo example iff its estimated harm is <= 0, i.e. including it is
// not predicted to raise validation loss.
inline std::pair<std::vector<PseudoExample>, InfluenceReport>
filter_by_influence(const std::vector<PseudoExample>& pseudo,
                    const StudentModel& model,
                    const std::vector<LabeledExample>& train,
                    const std::vector<LabeledExample>& val,
                    const InfluenceFilterConfig& cfg) {
  std::vector<TrainExample> train_f = prepare_examples(train, model.features);
  std::vector<TrainExample> val_f = prepare_examples(val, model.features);
  if (cfg.optimality_tol > 0.0) {
    double gnorm = vec_norm(objective_gradient(model, train_f));
    if (gnorm > cfg.optimality_tol)
      throw std::invalid_argument(
          "filter_by_influence: model is not at the training optimum "
          "(||grad|| = " + std::to_string(gnorm) + ")");
  }
  InfluenceEngine engine(model, train_f, val_f, cfg.lissa);
  InfluenceReport report;
  report.n_train = train.size();
  report.records.reserve(pseudo.size());
  std::vector<PseudoExample> kept;
  for (const auto& p : pseudo) {
    TrainExample z{featurize(p.triple, model.features),
                   static_cast<double>(p.pseudo_label)};
    double infl = engine.influence(z);
    double harm = infl / static_cast<double>(train.size());
    bool keep = harm <= 0.0;
    report.records.push_back({p, infl, harm, keep});
    if (keep) kept.push_back(p);
  }
  return {std::move(kept), std::move(report)};
}

// Keep a pseudo example iff the student assigns its pseudo label probability
// strictly above one half.
inline std::vector<PseudoExample> filter_by_student(
    const std::vector<PseudoExample>& pseudo, const StudentModel& model) {
  std::vector<PseudoExample> kept;
  for (const auto& p : pseudo) {
    double p1 = model.predict(p.triple);
    double p_label = p.pseudo_label == 1 ? p1 : 1.0 - p1;
    if (p_label > 0.5) kept.push_back(p);
  }
  return kept;
}

}  // namespace kgpop
