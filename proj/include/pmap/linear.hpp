#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pmap {

/// Dense joint feature vector phi(x, y).
struct FeatureVector {
  std::vector<double> values;

  FeatureVector() = default;
  explicit FeatureVector(std::size_t dim) : values(dim, 0.0) {}
  explicit FeatureVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  double inf_norm() const noexcept {
    double n = 0.0;
    for (double v : values) n = std::max(n, std::abs(v));
    return n;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Weight vector w of a linear decoder, with the sparsity summaries used by
/// the approximation-error side conditions.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::size_t dim) : values_(dim, 0.0) {}
  explicit WeightVector(std::vector<double> v) : values_(std::move(v)) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double l1_norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += std::abs(v);
    return s;
  }

  std::size_t support_size() const noexcept {
    std::size_t s = 0;
    for (double v : values_) s += (v != 0.0);
    return s;
  }

  /// Smallest nonzero magnitude; +inf for the zero vector.
  double w_min() const noexcept {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values_)
      if (v != 0.0) m = std::min(m, std::abs(v));
    return m;
  }

  WeightVector scaled(double c) const {
    WeightVector out(*this);
    for (double& v : out.values_) v *= c;
    return out;
  }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> values_;
};

/// Proximal operator of tau * ||.||_1: sign(v) * max(|v| - tau, 0).
inline double soft_threshold(double v, double tau) noexcept {
  if (v > tau) return v - tau;
  if (v < -tau) return v + tau;
  return 0.0;
}

inline WeightVector soft_threshold(const WeightVector& w, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  WeightVector out(w);
  for (double& v : out.values()) v = soft_threshold(v, tau);
  return out;
}

}  // namespace pmap
