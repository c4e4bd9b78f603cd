// Proposal distribution over structured outputs and the sampled candidate
// sets T_i / augmented sets Tbar_i = T_i u {y_i} built from it.
//
// One proposal draw:
//   1. with probability alpha start from a uniform draw over Y(x_i),
//      otherwise start from y_i;
//   2. snapshot neighbors_k(start) in canonical order and scan it once,
//      moving the running output to every neighbor whose score is >= the
//      running score.
// The draw depends on w only through comparisons of scores, so weight
// vectors inducing the same ordering of Y(x) yield the same output for the
// same random stream.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmap/gumbel_crf.hpp"
#include "pmap/losses.hpp"
#include "pmap/rng.hpp"
#include "pmap/spaces.hpp"

namespace pmap {

struct ProposalConfig {
  double alpha = 0.0;          ///< exploration probability
  std::size_t k = 2;           ///< neighborhood radius (unnormalized Hamming)
  std::size_t n_target = 1;    ///< proposal invocations per sample

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (k < 1) throw std::invalid_argument("neighborhood radius k must be >= 1");
    if (n_target < 1) throw std::invalid_argument("n_target must be >= 1");
  }
};

/// min(1, ||w||_1 / sqrt(m)).
inline double alpha_schedule(const WeightVector& w, std::size_t m) {
  if (m < 1) throw std::invalid_argument("alpha_schedule: m must be >= 1");
  return std::min(1.0, w.l1_norm() / std::sqrt(static_cast<double>(m)));
}

/// ceil(sqrt(m)) proposal invocations, so |T_i| <= sqrt(m) rounded up.
inline std::size_t default_n_target(std::size_t m) {
  auto n = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  while (n > 1 && (n - 1) * (n - 1) >= m) --n;
  return std::max<std::size_t>(n, 1);
}

/// Deterministic part of a proposal draw: one greedy pass over the
/// neighborhood of `start`.
inline Structure greedy_pass(const StructureFamily& family, const StructuredInput& x,
                             const Structure& start, const WeightVector& w, std::size_t k) {
  Structure best = start;
  double best_score = score(family, x, start, w);
  for (auto& cand : neighbors_k(family, x, start, k)) {
    const double s = score(family, x, cand, w);
    if (s >= best_score) {
      best_score = s;
      best = std::move(cand);
    }
  }
  return best;
}

/// One draw from the proposal distribution. Always consumes one uniform for
/// the alpha branch, plus one for the uniform start when exploring.
template <class Engine>
Structure propose(const StructureFamily& family, const StructuredInput& x_i, const Structure& y_i,
                  const WeightVector& w, const ProposalConfig& cfg, Engine& rng) {
  cfg.validate();
  check_weights(family, w);
  const bool explore = uniform01(rng) < cfg.alpha;
  if (explore) {
    const auto& outs = enumerate_outputs(family, x_i);
    return greedy_pass(family, x_i, outs[uniform_index(rng, outs.size())], w, cfg.k);
  }
  return greedy_pass(family, x_i, y_i, w, cfg.k);
}

/// T_i for every sample: cfg.n_target proposal draws, deduplicated. Sample i
/// draws from its own stream derived from (seed, i).
inline std::vector<CandidateSet> build_candidate_sets(const Dataset& S, const WeightVector& w,
                                                      const ProposalConfig& cfg,
                                                      std::uint64_t seed) {
  cfg.validate();
  check_weights(S.family, w);
  std::vector<CandidateSet> sets;
  sets.reserve(S.size());
  std::vector<std::pair<Structure, Structure>> memo;  // start -> greedy result
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto& [x, y] = S.samples[i];
    auto rng = make_rng(derive_seed(seed, "proposal", i));
    const auto& outs = enumerate_outputs(S.family, x);
    memo.clear();
    std::vector<Structure> drawn;
    drawn.reserve(cfg.n_target);
    for (std::size_t t = 0; t < cfg.n_target; ++t) {
      const bool explore = uniform01(rng) < cfg.alpha;
      const Structure& start = explore ? outs[uniform_index(rng, outs.size())] : y;
      auto hit = std::find_if(memo.begin(), memo.end(),
                              [&](const auto& e) { return e.first == start; });
      if (hit == memo.end()) {
        memo.emplace_back(start, greedy_pass(S.family, x, start, w, cfg.k));
        hit = memo.end() - 1;
      }
      drawn.push_back(hit->second);
    }
    sets.push_back(CandidateSet::deduplicated(std::move(drawn), Provenance::Sampled));
  }
  return sets;
}

/// Tbar_i = T_i u {y_i}.
inline std::vector<CandidateSet> augment(std::span<const CandidateSet> T, const Dataset& S) {
  if (T.size() != S.size()) throw std::invalid_argument("augment: sets not aligned with dataset");
  std::vector<CandidateSet> out;
  out.reserve(T.size());
  for (std::size_t i = 0; i < T.size(); ++i)
    out.push_back(T[i].with(S[i].y, Provenance::SampledAugmented));
  return out;
}

/// Fraction of samples whose T_i meets the proposal condition: T_i = {y_i}
/// when y_i is the unique maximizer of the score, otherwise mean score over
/// T_i >= score(y_i) + c ||w||_1.
inline double assumption_satisfaction_rate(const Dataset& S, std::span<const CandidateSet> T,
                                           const WeightVector& w, double c) {
  if (T.size() != S.size()) throw std::invalid_argument("sets not aligned with dataset");
  const auto& space = S.family.space();
  std::size_t ok = 0;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto& [x, y] = S.samples[i];
    const double sy = score(S.family, x, y, w);
    const auto scores = score_space(space, x, w);
    const auto yi = space.index_of(y);
    bool unique_max = true;
    for (std::size_t j = 0; j < scores.size() && unique_max; ++j)
      if (j != *yi && scores[j] >= sy) unique_max = false;
    if (unique_max) {
      ok += T[i].size() == 1 && T[i][0] == y;
    } else {
      double mean = 0.0;
      for (const auto& t : T[i].outputs()) mean += score(S.family, x, t, w);
      mean /= static_cast<double>(std::max<std::size_t>(T[i].size(), 1));
      ok += !T[i].empty() && mean >= sy + c * w.l1_norm();
    }
  }
  return static_cast<double>(ok) / static_cast<double>(S.size());
}

}  // namespace pmap
