// Closed-form generalization, approximation and statistical error bounds.
// All logarithms are natural.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "pmap/linear.hpp"

namespace pmap {

struct BoundInputs {
  std::size_t d = 1;    ///< feature dimension
  std::size_t s = 1;    ///< sparsity
  std::size_t m = 1;    ///< samples
  std::size_t n = 1;    ///< candidates per sample
  std::size_t r = 1;    ///< max outputs per input
  double delta = 0.05;  ///< confidence

  void validate() const {
    if (d < 1 || s < 1 || m < 1 || n < 1 || r < 1)
      throw std::domain_error("bound inputs: all counts must be >= 1");
    if (s > d) throw std::domain_error("bound inputs: sparsity exceeds dimension");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("bound inputs: delta must lie in (0, 1)");
  }
};

namespace detail {

inline double complexity_term(std::size_t d, std::size_t s, std::size_t count, std::size_t r) {
  const double ds = static_cast<double>(s);
  return ds * (std::log(static_cast<double>(d)) +
               2.0 * std::log(static_cast<double>(count) * static_cast<double>(r)));
}

}  // namespace detail

/// 2 sqrt(s (ln d + 2 ln(m r)) / m) + 3 sqrt(ln(2/delta) / (2m)).
inline double gen_bound_eps(std::size_t d, std::size_t s, std::size_t m, std::size_t r, double delta) {
  BoundInputs{d, s, m, 1, r, delta}.validate();
  const double dm = static_cast<double>(m);
  return 2.0 * std::sqrt(detail::complexity_term(d, s, m, r) / dm) +
         3.0 * std::sqrt(std::log(2.0 / delta) / (2.0 * dm));
}

/// ||w||_1 / sqrt(m) + 1 / (1 + sqrt(m)).
inline double approx_error_eps1(std::size_t m, const WeightVector& w) {
  if (m < 1) throw std::domain_error("approx_error_eps1: m must be >= 1");
  const double rm = std::sqrt(static_cast<double>(m));
  return w.l1_norm() / rm + 1.0 / (1.0 + rm);
}

/// Per-case value ||w||_1 / sqrt(m) + 1 / (1 + n sqrt(m)) from the
/// approximation-error argument; never larger than approx_error_eps1.
inline double approx_error_eps1_tight(std::size_t m, std::size_t n, const WeightVector& w) {
  if (m < 1 || n < 1) throw std::domain_error("approx_error_eps1_tight: m, n must be >= 1");
  const double rm = std::sqrt(static_cast<double>(m));
  return w.l1_norm() / rm + 1.0 / (1.0 + static_cast<double>(n) * rm);
}

/// beta <= min(||w||_1 / ln m, w_min / ln((r-1)(sqrt(m)-1))) for w != 0.
/// Vacuous (true) for w = 0; false when a logarithm is non-positive.
inline bool beta_condition_holds(double beta, const WeightVector& w, std::size_t m, std::size_t r) {
  if (w.support_size() == 0) return true;
  const double lm = std::log(static_cast<double>(m));
  const double lr = std::log((static_cast<double>(r) - 1.0) * (std::sqrt(static_cast<double>(m)) - 1.0));
  if (!(lm > 0.0) || !(lr > 0.0)) return false;
  return beta <= std::min(w.l1_norm() / lm, w.w_min() / lr);
}

/// n >= m^(0.5 - c).
inline bool sample_size_condition_holds(std::size_t n, std::size_t m, double c = 0.0) {
  return static_cast<double>(n) >= std::pow(static_cast<double>(m), 0.5 - c);
}

/// 2 sqrt(s (ln d + 2 ln(n r)) / m) + sqrt(ln(1/delta) / (2m))
///   + sqrt((s (ln d + 2 ln(m r)) + ln(1/delta)) / (2m)).
inline double stat_error_eps2(std::size_t d, std::size_t s, std::size_t n, std::size_t r,
                              std::size_t m, double delta) {
  BoundInputs{d, s, m, n, r, delta}.validate();
  const double dm = static_cast<double>(m);
  const double ld = std::log(1.0 / delta);
  return 2.0 * std::sqrt(detail::complexity_term(d, s, n, r) / dm) +
         std::sqrt(ld / (2.0 * dm)) +
         std::sqrt((detail::complexity_term(d, s, m, r) + ld) / (2.0 * dm));
}

/// eps1 + eps2: the gap allowed between expected loss and randomized
/// training loss.
inline double total_bound(const WeightVector& w, const BoundInputs& in) {
  in.validate();
  return approx_error_eps1(in.m, w) + stat_error_eps2(in.d, in.s, in.n, in.r, in.m, in.delta);
}

}  // namespace pmap
