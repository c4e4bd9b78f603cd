#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "test_util.hpp"

using namespace pmap;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Big big_complexity(double d, double s, double count, double r) {
  return Big(s) * (log(Big(d)) + 2 * log(Big(count) * Big(r)));
}

double big_gen_eps(double d, double s, double m, double r, double delta) {
  Big v = 2 * sqrt(big_complexity(d, s, m, r) / Big(m)) + 3 * sqrt(log(2 / Big(delta)) / (2 * Big(m)));
  return v.convert_to<double>();
}

double big_eps1(double m, double l1) {
  Big rm = sqrt(Big(m));
  return (Big(l1) / rm + 1 / (1 + rm)).convert_to<double>();
}

double big_eps2(double d, double s, double n, double r, double m, double delta) {
  Big ld = log(1 / Big(delta));
  Big v = 2 * sqrt(big_complexity(d, s, n, r) / Big(m)) + sqrt(ld / (2 * Big(m))) +
          sqrt((big_complexity(d, s, m, r) + ld) / (2 * Big(m)));
  return v.convert_to<double>();
}

struct GridPoint {
  std::size_t d, s, m, n, r;
  double delta, l1;
};

std::vector<GridPoint> grid() {
  std::vector<GridPoint> g;
  Rng rng(1);
  for (std::size_t m : {25u, 100u, 400u, 1600u})
    for (int j = 0; j < 5; ++j) {
      const std::size_t d = 10 + uniform_index(rng, 500);
      g.push_back({d, 1 + uniform_index(rng, d), m, 1 + uniform_index(rng, 40), 2 + uniform_index(rng, 20000),
                   0.01 + 0.5 * uniform01(rng), 10.0 * uniform01(rng)});
    }
  return g;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Bounds, MatchArbitraryPrecisionOracle) {
  for (const auto& p : grid()) {
    WeightVector w(std::vector<double>{p.l1});
    EXPECT_LE(rel(gen_bound_eps(p.d, p.s, p.m, p.r, p.delta), big_gen_eps(p.d, p.s, p.m, p.r, p.delta)), 1e-12);
    EXPECT_LE(rel(approx_error_eps1(p.m, w), big_eps1(p.m, p.l1)), 1e-12);
    EXPECT_LE(rel(stat_error_eps2(p.d, p.s, p.n, p.r, p.m, p.delta),
                  big_eps2(p.d, p.s, p.n, p.r, p.m, p.delta)),
              1e-12);
    BoundInputs in{p.d, p.s, p.m, p.n, p.r, p.delta};
    EXPECT_LE(rel(total_bound(w, in), big_eps1(p.m, p.l1) + big_eps2(p.d, p.s, p.n, p.r, p.m, p.delta)), 1e-12);
  }
}

TEST(Bounds, MonotoneInSampleCount) {
  WeightVector w(std::vector<double>{3.0});
  double g = INFINITY, e1 = INFINITY, e2 = INFINITY;
  for (std::size_t m : {25u, 100u, 400u, 1600u}) {
    const double gn = gen_bound_eps(100, 10, m, 1365, 0.05);
    const double e1n = approx_error_eps1(m, w);
    const double e2n = stat_error_eps2(100, 10, 10, 1365, m, 0.05);
    EXPECT_LE(gn, g);
    EXPECT_LE(e1n, e1);
    EXPECT_LE(e2n, e2);
    g = gn, e1 = e1n, e2 = e2n;
  }
}

TEST(Bounds, Examples) {
  EXPECT_NEAR(approx_error_eps1(100, WeightVector(3)), 1.0 / 11.0, 1e-15);
  EXPECT_NEAR(approx_error_eps1(100, WeightVector(std::vector<double>{5.0, -5.0})), 1.0 + 1.0 / 11.0, 1e-15);
  // s = 1, d = 1, r = 1, m = 1: only the confidence term survives besides 2 sqrt(2 ln 1) = 0.
  EXPECT_NEAR(gen_bound_eps(1, 1, 1, 1, 0.5), 3.0 * std::sqrt(std::log(4.0) / 2.0), 1e-15);
  WeightVector w(std::vector<double>{2.0});
  EXPECT_LE(approx_error_eps1_tight(100, 10, w), approx_error_eps1(100, w));
  EXPECT_EQ(approx_error_eps1_tight(100, 1, w), approx_error_eps1(100, w));
}

TEST(Bounds, InvalidInputs) {
  EXPECT_THROW(gen_bound_eps(10, 1, 100, 5, 0.0), std::domain_error);
  EXPECT_THROW(gen_bound_eps(10, 1, 100, 5, 1.0), std::domain_error);
  EXPECT_THROW(gen_bound_eps(10, 11, 100, 5, 0.1), std::domain_error);
  EXPECT_THROW(gen_bound_eps(10, 1, 0, 5, 0.1), std::domain_error);
  EXPECT_THROW(stat_error_eps2(10, 1, 0, 5, 100, 0.1), std::domain_error);
  EXPECT_THROW(approx_error_eps1(0, WeightVector(1)), std::domain_error);
}

TEST(Bounds, SideConditions) {
  EXPECT_TRUE(sample_size_condition_holds(10, 100));
  EXPECT_FALSE(sample_size_condition_holds(9, 100));
  EXPECT_TRUE(sample_size_condition_holds(1, 100, 0.5));
  EXPECT_TRUE(beta_condition_holds(5.0, WeightVector(3), 100, 1365));
  WeightVector w(std::vector<double>{1.0, 0.5});
  const double cap = std::min(1.5 / std::log(100.0), 0.5 / std::log(1364.0 * 9.0));
  EXPECT_TRUE(beta_condition_holds(cap * 0.999, w, 100, 1365));
  EXPECT_FALSE(beta_condition_holds(cap * 1.001, w, 100, 1365));
  EXPECT_FALSE(beta_condition_holds(0.01, w, 1, 1365));
}
