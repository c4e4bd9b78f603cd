#include <gtest/gtest.h>

#include <numbers>

#include "test_util.hpp"

using namespace pmap;
using pmap::testing::dot_score;
using pmap::testing::random_input;
using pmap::testing::random_weights;

namespace {

// Dag(2,1): outputs {}, {0->1}, {1->0}; features are the two directed edges.
struct TwoNodeDag {
  StructureFamily fam = StructureFamily::dag(2, 1);
  StructuredInput x{{1, 1}};
  Structure empty = Structure::canonical(std::span<const Component>{});
  Structure fwd = Structure::canonical({static_cast<Component>(ordered_pair_index(0, 1, 2))});
  Structure bwd = Structure::canonical({static_cast<Component>(ordered_pair_index(1, 0, 2))});
};

}  // namespace

TEST(Gumbel, InverseCdfAnchors) {
  EXPECT_NEAR(gumbel_from_uniform(std::exp(-1.0), 1.0), 0.0, 1e-15);
  EXPECT_NEAR(gumbel_from_uniform(std::exp(-1.0), 3.0), 0.0, 1e-15);
  // F(g) = exp(-exp(-g / beta)).
  for (double beta : {0.1, 1.0, 2.5})
    for (double z : {-2.0, -0.3, 0.0, 1.5, 4.0}) {
      const double g = beta * z;
      const double u = std::exp(-std::exp(-g / beta));
      EXPECT_NEAR(gumbel_from_uniform(u, beta), g, 1e-9 * std::max(1.0, std::abs(g)));
    }
}

TEST(Gumbel, ScaleIsLinearInBeta) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    EXPECT_NEAR(gumbel_from_uniform(u, 2.5), 2.5 * gumbel_from_uniform(u, 1.0), 1e-12);
  }
}

TEST(Gumbel, MeanAndVarianceOfStandardDraws) {
  const auto g = sample_gumbel({1.0, 123}, 1'000'000);
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= static_cast<double>(g.size());
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  var /= static_cast<double>(g.size() - 1);
  EXPECT_NEAR(mean, std::numbers::egamma, 0.005);
  EXPECT_NEAR(var, std::numbers::pi * std::numbers::pi / 6.0, 0.01);
}

TEST(Gumbel, SampleIsDeterministicAndValidated) {
  EXPECT_EQ(sample_gumbel({0.5, 9}, 100), sample_gumbel({0.5, 9}, 100));
  EXPECT_NE(sample_gumbel({0.5, 9}, 100), sample_gumbel({0.5, 10}, 100));
  EXPECT_THROW(sample_gumbel({0.0, 1}, 3), std::invalid_argument);
  EXPECT_THROW(sample_gumbel({-1.0, 1}, 3), std::invalid_argument);
  EXPECT_THROW(sample_gumbel({1.0, 1}, 0), std::invalid_argument);
}

TEST(Uniform, OpenInterval) {
  Rng rng(0);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(CandidateSet, OrderingAndDuplicates) {
  auto a = Structure::canonical({2, 3});
  auto b = Structure::canonical({0, 1});
  CandidateSet c({a, b}, Provenance::Sampled);
  EXPECT_EQ(c[0], b);
  EXPECT_EQ(c.index_of(a), 1u);
  EXPECT_FALSE(c.index_of(Structure::canonical({0, 2})).has_value());
  EXPECT_THROW(CandidateSet({a, a}, Provenance::Sampled), std::invalid_argument);
  EXPECT_EQ(CandidateSet::deduplicated({a, b, a}, Provenance::Sampled).size(), 2u);
  auto aug = c.with(Structure::canonical({0, 2}), Provenance::SampledAugmented);
  EXPECT_EQ(aug.size(), 3u);
  EXPECT_EQ(aug.provenance(), Provenance::SampledAugmented);
  EXPECT_TRUE(std::is_sorted(aug.outputs().begin(), aug.outputs().end()));
  EXPECT_EQ(c.with(a, Provenance::Sampled).size(), 2u);
}

TEST(Decode, MapMatchesBruteForce) {
  Rng rng(21);
  for (const char* spec : {"set:4:15", "tree:6", "dag:5:2", "set:2:6"}) {
    auto fam = StructureFamily::parse(spec);
    for (int trial = 0; trial < 10; ++trial) {
      auto x = random_input(fam, rng);
      auto w = random_weights(fam.feature_dim(), rng, 2.0, 0.5);
      const Structure* best = nullptr;
      double best_s = -1e300;
      for (const auto& y : fam.space().outputs) {
        const double s = dot_score(fam, x, y, w);
        if (s > best_s + 1e-12) best_s = s, best = &y;
      }
      EXPECT_EQ(map_decode(fam, x, w), *best) << spec;
    }
  }
}

TEST(Decode, TiesGoToSmallestKey) {
  auto fam = StructureFamily::subset(2, 5);
  StructuredInput x;
  x.bits.assign(fam.feature_dim(), 1);
  EXPECT_EQ(map_decode(fam, x, WeightVector(fam.feature_dim())), Structure::canonical({0, 1}));
}

TEST(Decode, PerturbedCases) {
  TwoNodeDag t;
  WeightVector w(std::vector<double>{1.0, 0.0});
  std::vector<double> zero(3, 0.0);
  EXPECT_EQ(perturbed_decode(t.fam, t.x, w, zero), map_decode(t.fam, t.x, w));
  EXPECT_EQ(map_decode(t.fam, t.x, w), t.fwd);
  // Space order is {}, {0->1}, {1->0}.
  std::vector<double> push_bwd{0.0, 0.0, 1.5};
  EXPECT_EQ(perturbed_decode(t.fam, t.x, w, push_bwd), t.bwd);

  CandidateSet support({t.empty, t.bwd}, Provenance::Sampled);
  std::vector<double> g2{0.0, 0.0};
  EXPECT_EQ(perturbed_decode(t.fam, t.x, w, support, g2), t.empty);
  std::vector<double> g3{0.0, 0.1};
  EXPECT_EQ(perturbed_decode(t.fam, t.x, w, support, g3), t.bwd);

  std::vector<double> wrong(2, 0.0);
  EXPECT_THROW(perturbed_decode(t.fam, t.x, w, wrong), std::invalid_argument);
  EXPECT_THROW(perturbed_decode(t.fam, t.x, WeightVector(5), zero), std::invalid_argument);
}

TEST(CrfPmf, TwoPointExample) {
  TwoNodeDag t;
  WeightVector w(std::vector<double>{1.0, 0.0});
  CandidateSet support({t.empty, t.fwd}, Provenance::Sampled);
  auto d = crf_pmf(t.fam, t.x, w, support, 1.0);
  EXPECT_NEAR(d.prob_of(t.fwd), 0.7310585786300049, 1e-12);
  EXPECT_NEAR(d.prob_of(t.empty), 0.2689414213699951, 1e-12);
  EXPECT_EQ(d.prob_of(t.bwd), 0.0);
  EXPECT_NEAR(d.log_partition, std::log(1.0 + std::exp(1.0)), 1e-12);
}

TEST(CrfPmf, LargeBetaIsUniform) {
  Rng rng(4);
  auto fam = StructureFamily::subset(3, 7);
  auto x = random_input(fam, rng);
  auto w = random_weights(fam.feature_dim(), rng, 5.0);
  auto d = crf_pmf(fam, x, w, 1e7);
  const double u = 1.0 / static_cast<double>(fam.output_count());
  for (double p : d.probs) EXPECT_NEAR(p, u, 1e-5);
}

TEST(CrfPmf, MatchesNaiveSoftmaxAndSumsToOne) {
  Rng rng(8);
  for (const char* spec : {"set:3:7", "tree:4", "dag:3:2"}) {
    auto fam = StructureFamily::parse(spec);
    for (int trial = 0; trial < 5; ++trial) {
      auto x = random_input(fam, rng);
      auto w = random_weights(fam.feature_dim(), rng, 1.0);
      const double beta = 0.3 + uniform01(rng);
      auto d = crf_pmf(fam, x, w, beta);
      double total = 0.0;
      const auto outs = fam.space().outputs;
      for (std::size_t j = 0; j < outs.size(); ++j) {
        total += d.probs[j];
        EXPECT_NEAR(d.probs[j], pmap::testing::naive_prob(fam, x, outs, outs[j], w, beta), 1e-12);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(CrfPmf, TemperatureScalingInvariance) {
  Rng rng(9);
  auto fam = StructureFamily::dag(3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_input(fam, rng);
    auto w = random_weights(fam.feature_dim(), rng, 2.0);
    const double c = 0.1 + 5.0 * uniform01(rng);
    auto a = crf_pmf(fam, x, w, 0.7);
    auto b = crf_pmf(fam, x, w.scaled(c), 0.7 * c);
    for (std::size_t j = 0; j < a.probs.size(); ++j) EXPECT_NEAR(a.probs[j], b.probs[j], 1e-12);
  }
}

TEST(CrfPmf, ShiftInvarianceAndNoOverflow) {
  std::vector<double> s{1.0, 2.0, 3.0};
  std::vector<double> shifted{1001.0, 1002.0, 1003.0};
  auto p = softmax(s, 0.5, nullptr);
  auto q = softmax(shifted, 0.5, nullptr);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);

  std::vector<double> huge{1e4, 1e4 - 1.0};
  double lz = 0.0;
  auto h = softmax(huge, 1e-3, &lz);
  EXPECT_TRUE(std::isfinite(lz));
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  EXPECT_THROW(softmax(s, 0.0, nullptr), std::invalid_argument);
  EXPECT_THROW(log_partition(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST(CrfPmf, RestrictedIsRenormalizedFull) {
  Rng rng(10);
  auto fam = StructureFamily::subset(3, 7);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_input(fam, rng);
    auto w = random_weights(fam.feature_dim(), rng, 1.0);
    auto full = crf_pmf(fam, x, w, 0.5);
    auto restricted_full = crf_pmf(fam, x, w, CandidateSet::full_space(fam), 0.5);
    EXPECT_EQ(full.probs.size(), restricted_full.probs.size());
    for (std::size_t j = 0; j < full.probs.size(); ++j)
      EXPECT_NEAR(full.probs[j], restricted_full.probs[j], 1e-14);

    auto support = pmap::testing::random_support(fam, fam.space().outputs[0], 0.2, rng);
    auto sub = crf_pmf(fam, x, w, support, 0.5);
    double mass = 0.0;
    for (const auto& y : support.outputs()) mass += full.prob_of(y);
    for (const auto& y : support.outputs()) EXPECT_NEAR(sub.prob_of(y), full.prob_of(y) / mass, 1e-12);
  }
  EXPECT_THROW(crf_pmf(fam, pmap::testing::random_input(fam, rng), WeightVector(fam.feature_dim()),
                       CandidateSet{}, 1.0),
               std::invalid_argument);
}

TEST(CrfPmf, PerturbAndMapFrequenciesSmallSample) {
  // Quick sanity check; the full goodness-of-fit test lives in the acceptance suite.
  TwoNodeDag t;
  WeightVector w(std::vector<double>{0.4, -0.2});
  const double beta = 0.5;
  auto d = crf_pmf(t.fam, t.x, w, beta);
  Rng rng(77);
  std::vector<double> counts(3, 0.0), gamma(3);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    for (auto& g : gamma) g = draw_gumbel(rng, beta);
    counts[*t.fam.space().index_of(perturbed_decode(t.fam, t.x, w, gamma))] += 1.0;
  }
  for (std::size_t j = 0; j < 3; ++j) {
    const double p = d.probs[j];
    EXPECT_NEAR(counts[j] / draws, p, 5.0 * std::sqrt(p * (1 - p) / draws));
  }
}
