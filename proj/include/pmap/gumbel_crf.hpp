// Gumbel perturbations, MAP and perturbed decoding, and CRF distributions
// over the full output space or a restricted candidate set.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmap/linear.hpp"
#include "pmap/rng.hpp"
#include "pmap/spaces.hpp"

namespace pmap {

struct PerturbationConfig {
  double beta = 1.0;
  std::uint64_t seed = 0;
};

/// Inverse CDF of G(0, beta).
inline double gumbel_from_uniform(double u, double beta) { return -beta * std::log(-std::log(u)); }

template <class Engine>
double draw_gumbel(Engine& rng, double beta) {
  return gumbel_from_uniform(uniform01(rng), beta);
}

/// n iid G(0, beta) draws from a fresh stream seeded by cfg.seed.
inline std::vector<double> sample_gumbel(const PerturbationConfig& cfg, std::size_t n) {
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("sample_gumbel: beta must be positive");
  if (n == 0) throw std::invalid_argument("sample_gumbel: count must be >= 1");
  auto rng = make_rng(cfg.seed);
  std::vector<double> out(n);
  for (auto& g : out) g = draw_gumbel(rng, cfg.beta);
  return out;
}

enum class Provenance { FullSpace, Sampled, SampledAugmented };

/// Ordered (by canonical key), duplicate-free set of structures.
class CandidateSet {
 public:
  CandidateSet() = default;

  /// Sorts `outputs`; throws std::invalid_argument on duplicates.
  CandidateSet(std::vector<Structure> outputs, Provenance provenance)
      : outputs_(std::move(outputs)), provenance_(provenance) {
    std::sort(outputs_.begin(), outputs_.end());
    if (std::adjacent_find(outputs_.begin(), outputs_.end()) != outputs_.end())
      throw std::invalid_argument("candidate set contains duplicate structures");
  }

  /// Sorts and silently drops duplicates.
  static CandidateSet deduplicated(std::vector<Structure> outputs, Provenance provenance) {
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    CandidateSet c;
    c.outputs_ = std::move(outputs);
    c.provenance_ = provenance;
    return c;
  }

  static CandidateSet full_space(const StructureFamily& family) {
    CandidateSet c;
    c.outputs_ = family.space().outputs;
    c.provenance_ = Provenance::FullSpace;
    return c;
  }

  std::span<const Structure> outputs() const noexcept { return outputs_; }
  std::size_t size() const noexcept { return outputs_.size(); }
  bool empty() const noexcept { return outputs_.empty(); }
  Provenance provenance() const noexcept { return provenance_; }
  const Structure& operator[](std::size_t i) const { return outputs_[i]; }

  bool contains(const Structure& y) const {
    return std::binary_search(outputs_.begin(), outputs_.end(), y);
  }
  std::optional<std::size_t> index_of(const Structure& y) const {
    auto it = std::lower_bound(outputs_.begin(), outputs_.end(), y);
    if (it == outputs_.end() || *it != y) return std::nullopt;
    return static_cast<std::size_t>(it - outputs_.begin());
  }

  /// Returns a copy with y inserted (if absent) and the given provenance.
  CandidateSet with(const Structure& y, Provenance provenance) const {
    CandidateSet c;
    c.outputs_ = outputs_;
    auto it = std::lower_bound(c.outputs_.begin(), c.outputs_.end(), y);
    if (it == c.outputs_.end() || *it != y) c.outputs_.insert(it, y);
    c.provenance_ = provenance;
    return c;
  }

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;

 private:
  std::vector<Structure> outputs_;
  Provenance provenance_ = Provenance::Sampled;
};

/// Softmax of scores / beta over `support`.
struct CrfDistribution {
  CandidateSet support;
  std::vector<double> probs;
  double log_partition = 0.0;
  double beta = 1.0;

  double prob_of(const Structure& y) const {
    auto i = support.index_of(y);
    return i ? probs[*i] : 0.0;
  }
};

/// Index of max(scores + gamma); first (smallest canonical key) wins ties.
inline std::size_t perturbed_argmax(std::span<const double> scores, std::span<const double> gamma) {
  if (scores.empty()) throw std::invalid_argument("argmax over an empty support");
  if (gamma.size() != scores.size())
    throw std::invalid_argument("perturbation length does not match the support");
  std::size_t best = 0;
  double best_v = scores[0] + gamma[0];
  for (std::size_t i = 1; i < scores.size(); ++i) {
    double v = scores[i] + gamma[i];
    if (v > best_v) best_v = v, best = i;
  }
  return best;
}

inline std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax over an empty support");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

inline std::vector<double> score_candidates(const StructureFamily& family, const StructuredInput& x,
                                            std::span<const Structure> candidates,
                                            const WeightVector& w) {
  std::vector<double> s(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) s[i] = score(family, x, candidates[i], w);
  return s;
}

inline void check_weights(const StructureFamily& family, const WeightVector& w) {
  if (w.size() != family.feature_dim())
    throw std::invalid_argument("weight vector has dimension " + std::to_string(w.size()) +
                                ", family " + family.name() + " expects " +
                                std::to_string(family.feature_dim()));
}

/// f_w(x) = argmax_{y in Y(x)} <phi(x,y), w>.
inline Structure map_decode(const StructureFamily& family, const StructuredInput& x,
                            const WeightVector& w) {
  check_input(family, x);
  check_weights(family, w);
  const auto& space = family.space();
  if (space.size() == 0) throw std::invalid_argument("map_decode: empty output space");
  return space.outputs[argmax(score_space(space, x, w))];
}

/// argmax_{y in Y(x)} <phi(x,y), w> + gamma_y, gamma indexed in enumeration order.
inline Structure perturbed_decode(const StructureFamily& family, const StructuredInput& x,
                                  const WeightVector& w, std::span<const double> gamma) {
  check_input(family, x);
  check_weights(family, w);
  const auto& space = family.space();
  return space.outputs[perturbed_argmax(score_space(space, x, w), gamma)];
}

/// Restricted decoder: argmax over the candidate set, gamma indexed in set order.
inline Structure perturbed_decode(const StructureFamily& family, const StructuredInput& x,
                                  const WeightVector& w, const CandidateSet& support,
                                  std::span<const double> gamma) {
  check_input(family, x);
  check_weights(family, w);
  auto scores = score_candidates(family, x, support.outputs(), w);
  return support[perturbed_argmax(scores, gamma)];
}

/// log sum exp(scores / beta) with max-shift.
inline double log_partition(std::span<const double> scores, double beta) {
  if (scores.empty()) throw std::invalid_argument("log partition of an empty support");
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, s / beta);
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s / beta - mx);
  return mx + std::log(acc);
}

/// Softmax probabilities of scores / beta; also returns log Z.
inline std::vector<double> softmax(std::span<const double> scores, double beta, double* log_z) {
  if (!(beta > 0.0)) throw std::invalid_argument("CRF temperature beta must be positive");
  const double lz = log_partition(scores, beta);
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = std::exp(scores[i] / beta - lz);
  if (log_z) *log_z = lz;
  return p;
}

/// q(y; x, w, T') = 1{y in T'} exp(<phi,w>/beta) / Z_{w,x,T'}.
inline CrfDistribution crf_pmf(const StructureFamily& family, const StructuredInput& x,
                               const WeightVector& w, const CandidateSet& support, double beta) {
  check_input(family, x);
  check_weights(family, w);
  if (support.empty()) throw std::invalid_argument("crf_pmf: empty support");
  CrfDistribution d;
  d.beta = beta;
  auto scores = score_candidates(family, x, support.outputs(), w);
  d.probs = softmax(scores, beta, &d.log_partition);
  d.support = support;
  return d;
}

/// Full-space CRF distribution.
inline CrfDistribution crf_pmf(const StructureFamily& family, const StructuredInput& x,
                               const WeightVector& w, double beta) {
  check_input(family, x);
  check_weights(family, w);
  CrfDistribution d;
  d.beta = beta;
  d.probs = softmax(score_space(family.space(), x, w), beta, &d.log_partition);
  d.support = CandidateSet::full_space(family);
  return d;
}

}  // namespace pmap
