#pragma once
// Hashed n-gram features for the linear student model.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgpop/rng.hpp"
#include "kgpop/triple.hpp"

namespace kgpop {

struct FeatureConfig {
  std::vector<int> orders = {1, 2};
  std::uint32_t dim = 1u << 18;
  std::uint64_t hash_seed = 0x6b677031;

  bool operator==(const FeatureConfig& o) const {
    return orders == o.orders && dim == o.dim && hash_seed == o.hash_seed;
  }
};

// Sparse vector with indices in [0, dim), sorted, unique.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::uint32_t dim = 0;
};

inline std::uint32_t hash_gram(const Tokens& toks, std::size_t begin, int order,
                               const FeatureConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (int b = 0; b < 8; ++b) {
    h ^= static_cast<unsigned char>(cfg.hash_seed >> (8 * b));
    h *= 1099511628211ull;
  }
  h ^= static_cast<unsigned char>(order);
  h *= 1099511628211ull;
  for (int i = 0; i < order; ++i) {
    h = fnv1a(toks[begin + i], h);
    h ^= 0x1f;  // gram separator
    h *= 1099511628211ull;
  }
  return static_cast<std::uint32_t>(h % cfg.dim);
}

// One weight-1 entry per n-gram occurrence; hash collisions sum.
inline FeatureVector featurize(const Tokens& toks, const FeatureConfig& cfg) {
  if (cfg.dim < 2) throw std::invalid_argument("featurize: dim must be >= 2");
  std::map<std::uint32_t, double> acc;
  for (int order : cfg.orders) {
    if (order < 1) throw std::invalid_argument("featurize: order must be >= 1");
    if (toks.size() < static_cast<std::size_t>(order)) continue;
    for (std::size_t i = 0; i + order <= toks.size(); ++i)
      acc[hash_gram(toks, i, order, cfg)] += 1.0;
  }
  FeatureVector fv;
  fv.dim = cfg.dim;
  fv.entries.assign(acc.begin(), acc.end());
  return fv;
}

inline FeatureVector featurize(const Triple& t, const FeatureConfig& cfg) {
  return featurize(serialize_triple(t), cfg);
}

inline double sparse_dot(const FeatureVector& fv,
                         const std::vector<double>& dense) {
  double s = 0.0;
  for (const auto& [i, w] : fv.entries) s += dense[i] * w;
  return s;
}

}  // namespace kgpop
