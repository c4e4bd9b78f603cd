// Learning w: ascent on the log randomized CRF gain (or the exact one, with
// Tbar_i = Y(x_i)) along the weighted moment-matching direction, which is
// beta times its gradient, and subgradient descent on the structured hinge
// loss. Both are followed by an l1 proximal step; step size step0 / sqrt(t).
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmap/gumbel_crf.hpp"
#include "pmap/linear.hpp"
#include "pmap/losses.hpp"
#include "pmap/proposal.hpp"
#include "pmap/spaces.hpp"

namespace pmap {

enum class Method { CrfAll, CrfRand, SvmAll, SvmRand };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::CrfAll: return "crf_all";
    case Method::CrfRand: return "crf_rand";
    case Method::SvmAll: return "svm_all";
    case Method::SvmRand: return "svm_rand";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::CrfAll, Method::CrfRand, Method::SvmAll, Method::SvmRand})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method: " + std::string(s));
}

inline bool is_randomized(Method m) { return m == Method::CrfRand || m == Method::SvmRand; }
inline bool is_crf(Method m) { return m == Method::CrfAll || m == Method::CrfRand; }

struct TrainConfig {
  Method method = Method::CrfRand;
  double l1_lambda = 0.01;
  std::size_t iterations = 20;
  double step0 = 1.0;
  std::optional<double> beta;   ///< unset: beta_schedule(m, r)
  std::optional<double> alpha;  ///< unset: alpha_schedule(w, m) at every rebuild
  bool resample_each_iter = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(step0 > 0.0)) throw std::invalid_argument("step0 must be positive");
    if (!(l1_lambda >= 0.0)) throw std::invalid_argument("l1_lambda must be >= 0");
    if (beta && !(*beta > 0.0)) throw std::invalid_argument("beta must be positive");
  }
};

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;  ///< loss at the iterate the step was taken from
  double grad_norm = 0.0;  ///< l-infinity norm of the (sub)gradient
  double seconds = 0.0;    ///< cumulative wall clock since training started
  double set_size_mean = 0.0;
  std::size_t set_size_max = 0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
};

struct TrainResult {
  WeightVector w;
  TrainTrace trace;
  double beta = 0.0;
  double seconds = 0.0;
  std::vector<CandidateSet> final_sets;       ///< T_i of the last iteration
  std::vector<CandidateSet> final_augmented;  ///< Tbar_i of the last iteration
};

/// 1 / ln((r - 1)(sqrt(m) - 1)).
inline double beta_schedule(double m, double r) {
  const double arg = (r - 1.0) * (std::sqrt(m) - 1.0);
  if (!(arg > 1.0))
    throw std::domain_error("beta_schedule: (r-1)(sqrt(m)-1) must exceed 1, got " +
                            std::to_string(arg));
  return 1.0 / std::log(arg);
}

namespace detail {

/// log q_target for the CRF on `scores`, and E[phi] under it written to
/// `expected` (size d, overwritten).
template <class PairsOf>
double crf_moments(std::span<const double> scores, std::size_t target, double beta,
                   const StructuredInput& x, PairsOf&& pairs_of, std::vector<double>& expected) {
  std::fill(expected.begin(), expected.end(), 0.0);
  const double lz = log_partition(scores, beta);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double p = std::exp(scores[j] / beta - lz);
    if (p == 0.0) continue;
    pairs_of(j, [&](FeatureIndex f) {
      if (x.bits[f]) expected[f] += p;
    });
  }
  return scores[target] / beta - lz;
}

struct GainGradient {
  FeatureVector grad;
  double log_gain = 0.0;  ///< log U
};

/// Combines per-sample (log q_i, phi_i - E_i[phi]) into the gradient of
/// log U = log((1/m) sum q_i), carrying the 1/beta of the scores.
class GainAccumulator {
 public:
  GainAccumulator(std::size_t m, std::size_t d) : log_q_(m), diff_(m, std::vector<double>(d)) {}

  std::vector<double>& diff(std::size_t i) { return diff_[i]; }
  void set_log_q(std::size_t i, double lq) { log_q_[i] = lq; }

  GainGradient finish(double beta) const {
    const std::size_t m = log_q_.size();
    const std::size_t d = diff_.empty() ? 0 : diff_[0].size();
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : log_q_) mx = std::max(mx, v);
    double total = 0.0;
    for (double v : log_q_) total += std::exp(v - mx);
    GainGradient out;
    out.grad = FeatureVector(d);
    out.log_gain = mx + std::log(total) - std::log(static_cast<double>(m));
    if (!std::isfinite(mx)) return out;
    for (std::size_t i = 0; i < m; ++i) {
      const double weight = std::exp(log_q_[i] - mx) / total;
      if (weight == 0.0) continue;
      for (std::size_t f = 0; f < d; ++f) out.grad[f] += weight * diff_[i][f] / beta;
    }
    return out;
  }

 private:
  std::vector<double> log_q_;
  std::vector<std::vector<double>> diff_;
};

inline void subtract_from_phi(const StructureFamily& family, const Sample& s,
                              std::vector<double>& expected_then_diff) {
  for (double& v : expected_then_diff) v = -v;
  family.for_each_active_pair(s.y, [&](FeatureIndex f) {
    if (s.x.bits[f]) expected_then_diff[f] += 1.0;
  });
}

inline GainGradient gain_gradient_full(const WeightVector& w, const Dataset& S, double beta) {
  const auto& space = S.family.space();
  GainAccumulator acc(S.size(), S.family.feature_dim());
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto scores = score_space(space, S[i].x, w);
    const auto t = space.index_of(S[i].y);
    if (!t) throw std::invalid_argument("sample label missing from the output space");
    auto& diff = acc.diff(i);
    acc.set_log_q(i, crf_moments(scores, *t, beta, S[i].x,
                                 [&](std::size_t j, auto&& fn) {
                                   for (FeatureIndex f : space.active_pairs(j)) fn(f);
                                 },
                                 diff));
    subtract_from_phi(S.family, S[i], diff);
  }
  return acc.finish(beta);
}

inline GainGradient gain_gradient(const WeightVector& w, const Dataset& S,
                                  std::span<const CandidateSet> tbar, double beta) {
  GainAccumulator acc(S.size(), S.family.feature_dim());
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto& support = tbar[i];
    if (support.empty()) throw std::invalid_argument("empty candidate set");
    const auto scores = score_candidates(S.family, S[i].x, support.outputs(), w);
    auto& diff = acc.diff(i);
    acc.set_log_q(i, crf_moments(scores, *support.index_of(S[i].y), beta, S[i].x,
                                 [&](std::size_t j, auto&& fn) {
                                   S.family.for_each_active_pair(support[j], fn);
                                 },
                                 diff));
    subtract_from_phi(S.family, S[i], diff);
  }
  return acc.finish(beta);
}

}  // namespace detail

/// log U(w, S, Tbar), U = (1/m) sum_i Pr[f_{w,gamma,Tbar_i}(x_i) = y_i].
inline double log_gain(const WeightVector& w, const Dataset& S, std::span<const CandidateSet> tbar,
                       double beta) {
  S.validate();
  check_weights(S.family, w);
  check_candidate_sets(S, tbar);
  return detail::gain_gradient(w, S, tbar, beta).log_gain;
}

/// Gradient of log U with respect to w:
///   sum_i q_i (phi(x_i,y_i) - E[phi(x_i,y)]) / (beta sum_i q_i),
/// expectation under the CRF restricted to Tbar_i.
inline FeatureVector grad_log_gain(const WeightVector& w, const Dataset& S,
                                   std::span<const CandidateSet> tbar, double beta) {
  S.validate();
  check_weights(S.family, w);
  check_candidate_sets(S, tbar);
  return detail::gain_gradient(w, S, tbar, beta).grad;
}

/// Same gradient with Tbar_i = Y(x_i).
inline FeatureVector grad_log_gain_full(const WeightVector& w, const Dataset& S, double beta) {
  S.validate();
  check_weights(S.family, w);
  return detail::gain_gradient_full(w, S, beta).grad;
}

// ---------------------------------------------------------------------------
// Structured hinge (margin rescaling, normalized Hamming distortion)

namespace detail {

struct HingeTerm {
  double loss = 0.0;
  std::size_t argmax = 0;
};

inline HingeTerm hinge_term(std::span<const double> scores, std::span<const double> distortion,
                            double target_score) {
  HingeTerm h;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double v = scores[j] + distortion[j];
    if (v > best) best = v, h.argmax = j;
  }
  h.loss = best - target_score;
  return h;
}

}  // namespace detail

/// (1/m) sum_i [max_{y in C_i} (<phi(x_i,y),w> + H(y,y_i)) - <phi(x_i,y_i),w>].
inline LossReport hinge_loss(const WeightVector& w, const Dataset& S,
                             std::span<const CandidateSet> candidates) {
  S.validate();
  check_weights(S.family, w);
  if (candidates.size() != S.size())
    throw std::invalid_argument("candidate sets are not aligned with the dataset");
  std::vector<double> per(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto outs = candidates[i].outputs();
    if (outs.empty()) throw std::invalid_argument("empty candidate set");
    const auto scores = score_candidates(S.family, S[i].x, outs, w);
    std::vector<double> dist(outs.size());
    for (std::size_t j = 0; j < outs.size(); ++j) dist[j] = hamming(S.family, outs[j], S[i].y);
    per[i] = detail::hinge_term(scores, dist, score(S.family, S[i].x, S[i].y, w)).loss;
  }
  return detail::make_report(LossKind::Hinge, std::move(per));
}

// ---------------------------------------------------------------------------
// Training loops

namespace detail {

inline void check_finite(double objective, const FeatureVector& g, std::size_t t) {
  bool ok = std::isfinite(objective);
  for (double v : g.values) ok = ok && std::isfinite(v);
  if (!ok)
    throw std::runtime_error("training diverged at iteration " + std::to_string(t) +
                             ": non-finite objective or gradient");
}

inline void set_stats(std::span<const CandidateSet> sets, TraceRow& row) {
  if (sets.empty()) return;
  double sum = 0.0;
  for (const auto& s : sets) {
    sum += static_cast<double>(s.size());
    row.set_size_max = std::max(row.set_size_max, s.size());
  }
  row.set_size_mean = sum / static_cast<double>(sets.size());
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Rebuilds T and Tbar from the current w when due.
struct SetSampler {
  const Dataset& S;
  const TrainConfig& cfg;
  ProposalConfig proposal;

  void refresh(const WeightVector& w, std::size_t t, TrainResult& res) const {
    if (t > 1 && !cfg.resample_each_iter) return;
    ProposalConfig pc = proposal;
    pc.alpha = cfg.alpha.value_or(alpha_schedule(w, S.size()));
    res.final_sets = build_candidate_sets(S, w, pc, derive_seed(cfg.seed, "proposal", t));
    res.final_augmented = augment(res.final_sets, S);
  }
};

inline double resolve_beta(const Dataset& S, const TrainConfig& cfg) {
  return cfg.beta ? *cfg.beta : beta_schedule(S.size(), S.family.output_count());
}

}  // namespace detail

/// Ascent on log U, exact (CrfAll) or over resampled augmented sets (CrfRand).
inline TrainResult train_crf(const Dataset& S, const TrainConfig& cfg,
                             const ProposalConfig& proposal_cfg) {
  if (!is_crf(cfg.method)) throw std::invalid_argument("train_crf: method must be crf_all or crf_rand");
  cfg.validate();
  S.validate();
  TrainResult res;
  res.beta = detail::resolve_beta(S, cfg);
  res.w = WeightVector(S.family.feature_dim());
  const detail::SetSampler sampler{S, cfg, proposal_cfg};

  detail::Stopwatch clock;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    TraceRow row;
    row.iteration = t;
    detail::GainGradient g;
    if (cfg.method == Method::CrfRand) {
      sampler.refresh(res.w, t, res);
      g = detail::gain_gradient(res.w, S, res.final_augmented, res.beta);
      detail::set_stats(res.final_augmented, row);
    } else {
      g = detail::gain_gradient_full(res.w, S, res.beta);
    }
    row.objective = 1.0 - std::exp(g.log_gain);
    row.grad_norm = g.grad.inf_norm();
    detail::check_finite(row.objective, g.grad, t);

    // The step moves along the weighted moment-matching direction
    // sum_i omega_i (phi_i - E phi), i.e. beta times the gradient of log U.
    const double eta = cfg.step0 / std::sqrt(static_cast<double>(t));
    const double ascent = eta * res.beta;
    for (std::size_t f = 0; f < res.w.size(); ++f)
      res.w[f] = soft_threshold(res.w[f] + ascent * g.grad[f], eta * cfg.l1_lambda);
    row.seconds = clock.seconds();
    res.trace.rows.push_back(row);
  }
  res.seconds = clock.seconds();
  return res;
}

/// Subgradient descent on the hinge loss over Y(x_i) (SvmAll) or over
/// resampled augmented sets (SvmRand).
inline TrainResult train_svm(const Dataset& S, const TrainConfig& cfg,
                             const ProposalConfig& proposal_cfg) {
  if (is_crf(cfg.method)) throw std::invalid_argument("train_svm: method must be svm_all or svm_rand");
  cfg.validate();
  S.validate();
  TrainResult res;
  res.beta = detail::resolve_beta(S, cfg);
  const std::size_t d = S.family.feature_dim();
  res.w = WeightVector(d);
  const detail::SetSampler sampler{S, cfg, proposal_cfg};
  const auto& space = S.family.space();
  const double inv_m = 1.0 / static_cast<double>(S.size());

  detail::Stopwatch clock;
  std::vector<double> dist;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    TraceRow row;
    row.iteration = t;
    FeatureVector g(d);
    double objective = 0.0;
    if (cfg.method == Method::SvmRand) {
      sampler.refresh(res.w, t, res);
      detail::set_stats(res.final_augmented, row);
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
      const auto& [x, y] = S.samples[i];
      const double target = score(S.family, x, y, res.w);
      if (cfg.method == Method::SvmRand) {
        const auto outs = res.final_augmented[i].outputs();
        const auto scores = score_candidates(S.family, x, outs, res.w);
        dist.resize(outs.size());
        for (std::size_t j = 0; j < outs.size(); ++j) dist[j] = hamming(S.family, outs[j], y);
        const auto h = detail::hinge_term(scores, dist, target);
        objective += h.loss;
        S.family.for_each_active_pair(outs[h.argmax], [&](FeatureIndex f) {
          if (x.bits[f]) g[f] += inv_m;
        });
      } else {
        const auto scores = score_space(space, x, res.w);
        dist.resize(space.size());
        for (std::size_t j = 0; j < space.size(); ++j) dist[j] = hamming(S.family, space.outputs[j], y);
        const auto h = detail::hinge_term(scores, dist, target);
        objective += h.loss;
        for (FeatureIndex f : space.active_pairs(h.argmax))
          if (x.bits[f]) g[f] += inv_m;
      }
      S.family.for_each_active_pair(y, [&](FeatureIndex f) {
        if (x.bits[f]) g[f] -= inv_m;
      });
    }
    row.objective = objective * inv_m;
    row.grad_norm = g.inf_norm();
    detail::check_finite(row.objective, g, t);

    const double eta = cfg.step0 / std::sqrt(static_cast<double>(t));
    for (std::size_t f = 0; f < d; ++f)
      res.w[f] = soft_threshold(res.w[f] - eta * g[f], eta * cfg.l1_lambda);
    row.seconds = clock.seconds();
    res.trace.rows.push_back(row);
  }
  res.seconds = clock.seconds();
  return res;
}

inline TrainResult train(const Dataset& S, const TrainConfig& cfg, const ProposalConfig& proposal_cfg) {
  return is_crf(cfg.method) ? train_crf(S, cfg, proposal_cfg) : train_svm(S, cfg, proposal_cfg);
}

}  // namespace pmap
