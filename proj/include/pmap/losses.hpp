// CRF losses over the full space and over augmented candidate sets, the
// closed-form gap between them, a Monte-Carlo zero-one estimate, and the
// MAP Hamming loss.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmap/gumbel_crf.hpp"
#include "pmap/rng.hpp"
#include "pmap/spaces.hpp"

namespace pmap {

struct Sample {
  StructuredInput x;
  Structure y;
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  StructureFamily family;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  const Sample& operator[](std::size_t i) const { return samples[i]; }

  /// Throws if the dataset is empty, an input has the wrong width, or a
  /// label is not a valid structure of the family.
  void validate() const {
    if (samples.empty()) throw std::invalid_argument("dataset is empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      check_input(family, samples[i].x);
      if (!family.is_valid(samples[i].y))
        throw std::invalid_argument("sample " + std::to_string(i) + ": label is not in Y(x)");
    }
  }
};

enum class LossKind { ExactCrf, RandomizedAugmented, MonteCarloZeroOne, Hamming, Hinge };

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::ExactCrf: return "exact_crf";
    case LossKind::RandomizedAugmented: return "randomized_augmented";
    case LossKind::MonteCarloZeroOne: return "monte_carlo_zero_one";
    case LossKind::Hamming: return "hamming";
    case LossKind::Hinge: return "hinge";
  }
  return "unknown";
}

/// value = mean(per_sample). std_error is the Monte-Carlo error for
/// MonteCarloZeroOne and the standard error of the per-sample mean otherwise.
struct LossReport {
  LossKind kind = LossKind::ExactCrf;
  double value = 0.0;
  std::vector<double> per_sample;
  double std_error = 0.0;
};

namespace detail {

inline LossReport make_report(LossKind kind, std::vector<double> per_sample) {
  LossReport r;
  r.kind = kind;
  const double m = static_cast<double>(per_sample.size());
  double sum = 0.0;
  for (double v : per_sample) sum += v;
  r.value = sum / m;
  if (per_sample.size() > 1) {
    double ss = 0.0;
    for (double v : per_sample) ss += (v - r.value) * (v - r.value);
    r.std_error = std::sqrt(ss / (m - 1.0) / m);
  }
  r.per_sample = std::move(per_sample);
  return r;
}

}  // namespace detail

/// Probability mass of the target under the CRF on `scores` and its
/// complement, computed as 1 / (1 + rest) with
/// rest = sum_{j != target} exp((s_j - s_target) / beta). `rest` only grows
/// when the support grows, so the loss is monotone in the support.
struct TargetMass {
  double prob = 0.0;
  double loss = 0.0;
};

inline TargetMass target_mass(std::span<const double> scores, std::size_t target, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("CRF temperature beta must be positive");
  const double st = scores[target];
  double rest = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (j != target) rest += std::exp((scores[j] - st) / beta);
  if (std::isinf(rest)) return {0.0, 1.0};
  return {1.0 / (1.0 + rest), rest / (1.0 + rest)};
}

/// L(w, S) = (1/m) sum_i Pr[f_{w,gamma}(x_i) != y_i] over the full space.
inline LossReport exact_crf_loss(const WeightVector& w, const Dataset& S, double beta) {
  S.validate();
  check_weights(S.family, w);
  const auto& space = S.family.space();
  std::vector<double> per(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    auto t = space.index_of(S[i].y);
    if (!t) throw std::invalid_argument("sample label missing from the output space");
    per[i] = target_mass(score_space(space, S[i].x, w), *t, beta).loss;
  }
  return detail::make_report(LossKind::ExactCrf, std::move(per));
}

inline void check_candidate_sets(const Dataset& S, std::span<const CandidateSet> tbar) {
  if (tbar.size() != S.size())
    throw std::invalid_argument("candidate sets are not aligned with the dataset");
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto out = tbar[i].outputs();
    if (std::adjacent_find(out.begin(), out.end()) != out.end())
      throw std::invalid_argument("candidate set " + std::to_string(i) + " has duplicates");
    if (!tbar[i].contains(S[i].y))
      throw std::invalid_argument("candidate set " + std::to_string(i) +
                                  " does not contain the observed label");
  }
}

/// L(w, S, Tbar) = (1/m) sum_i Pr[f_{w,gamma,Tbar_i}(x_i) != y_i].
inline LossReport randomized_loss(const WeightVector& w, const Dataset& S,
                                  std::span<const CandidateSet> tbar, double beta) {
  S.validate();
  check_weights(S.family, w);
  check_candidate_sets(S, tbar);
  std::vector<double> per(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    auto scores = score_candidates(S.family, S[i].x, tbar[i].outputs(), w);
    per[i] = target_mass(scores, *tbar[i].index_of(S[i].y), beta).loss;
  }
  return detail::make_report(LossKind::RandomizedAugmented, std::move(per));
}

/// -(1/m) sum_i Pr[f_{w,gamma,Tbar_i}(x_i) = y_i] * Pr[f_{w,gamma}(x_i) in Y(x_i) \ Tbar_i].
/// Equals randomized_loss - exact_crf_loss.
inline double loss_gap(const WeightVector& w, const Dataset& S, std::span<const CandidateSet> tbar,
                       double beta) {
  S.validate();
  check_weights(S.family, w);
  check_candidate_sets(S, tbar);
  double total = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto restricted = crf_pmf(S.family, S[i].x, w, tbar[i], beta);
    const auto full = crf_pmf(S.family, S[i].x, w, beta);
    double outside = 0.0;
    const auto outs = full.support.outputs();
    for (std::size_t j = 0; j < outs.size(); ++j)
      if (!tbar[i].contains(outs[j])) outside += full.probs[j];
    total += restricted.prob_of(S[i].y) * outside;
  }
  return -total / static_cast<double>(S.size());
}

/// Empirical mean of 1{y_i != f_{w,gamma}(x_i)} over fresh Gumbel draws.
inline LossReport monte_carlo_loss(const WeightVector& w, const Dataset& S, double beta,
                                   std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("monte_carlo_loss: draws must be >= 1");
  S.validate();
  check_weights(S.family, w);
  const auto& space = S.family.space();
  std::vector<double> per(S.size());
  std::vector<double> gamma(space.size());
  double var_sum = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) {
    auto rng = make_rng(derive_seed(seed, "gumbel", i));
    const auto scores = score_space(space, S[i].x, w);
    const auto t = space.index_of(S[i].y);
    std::size_t miss = 0;
    for (std::size_t d = 0; d < draws; ++d) {
      for (auto& g : gamma) g = draw_gumbel(rng, beta);
      miss += perturbed_argmax(scores, gamma) != *t;
    }
    per[i] = static_cast<double>(miss) / static_cast<double>(draws);
    var_sum += per[i] * (1.0 - per[i]) / static_cast<double>(draws);
  }
  auto r = detail::make_report(LossKind::MonteCarloZeroOne, std::move(per));
  r.std_error = std::sqrt(var_sum) / static_cast<double>(S.size());
  return r;
}

/// (1/m) sum_i H(f_w(x_i), y_i) with the normalized Hamming distance.
inline LossReport hamming_loss(const WeightVector& w, const Dataset& S) {
  S.validate();
  check_weights(S.family, w);
  std::vector<double> per(S.size());
  for (std::size_t i = 0; i < S.size(); ++i)
    per[i] = hamming(S.family, map_decode(S.family, S[i].x, w), S[i].y);
  return detail::make_report(LossKind::Hamming, std::move(per));
}

}  // namespace pmap
