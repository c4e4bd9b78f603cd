#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "test_util.hpp"

using namespace pmap;
using namespace pmap::testing;

TEST(GroundTruth, SparsityAndDeterminism) {
  for (auto [spec, s] : {std::pair<const char*, std::size_t>{"set:4:15", 11}, {"dag:5:2", 5}, {"tree:6", 4}}) {
    auto fam = StructureFamily::parse(spec);
    auto w = generate_ground_truth(fam, 3);
    EXPECT_EQ(w.size(), fam.feature_dim());
    EXPECT_EQ(w.support_size(), s) << spec;
    EXPECT_EQ(w, generate_ground_truth(fam, 3));
    EXPECT_NE(w, generate_ground_truth(fam, 4));
  }
}

TEST(GroundTruth, NonzeroEntriesHaveVarianceHundred) {
  auto fam = StructureFamily::subset(4, 15);
  std::vector<double> vals;
  for (std::uint64_t seed = 0; vals.size() < 10000; ++seed) {
    const auto w = generate_ground_truth(fam, seed);
    for (double v : w.values())
      if (v != 0.0) vals.push_back(v);
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vals.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.4);
  EXPECT_NEAR(var, 100.0, 5.0);
}

TEST(GroundTruth, SupportCoordinatesAreSpreadOut) {
  auto fam = StructureFamily::dag(5, 2);
  std::vector<int> hits(fam.feature_dim(), 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    auto w = generate_ground_truth(fam, seed);
    for (std::size_t f = 0; f < w.size(); ++f) hits[f] += w[f] != 0.0;
  }
  // Each coordinate is chosen with probability 5/20.
  for (int h : hits) EXPECT_NEAR(h / 2000.0, 0.25, 0.04);
}

TEST(GenerateDataset, InputsAreFairCoinsAndLabelsAreArgmax) {
  auto fam = StructureFamily::dag(5, 2);
  auto w = generate_ground_truth(fam, 11);
  auto S = generate_dataset(fam, w, 200, 12);
  ASSERT_EQ(S.size(), 200u);
  double ones = 0.0, bits = 0.0;
  for (const auto& s : S.samples) {
    for (auto b : s.x.bits) ones += b, bits += 1;
    double best = -1e300;
    for (const auto& y : fam.space().outputs) best = std::max(best, dot_score(fam, s.x, y, w));
    EXPECT_NEAR(dot_score(fam, s.x, s.y, w), best, 1e-12);
  }
  EXPECT_NEAR(ones / bits, 0.5, 0.02);
  EXPECT_EQ(S.samples, generate_dataset(fam, w, 200, 12).samples);
}

TEST(GenerateDataset, ZeroWeightsGiveSmallestKey) {
  auto fam = StructureFamily::spanning_tree(4);
  auto S = generate_dataset(fam, WeightVector(fam.feature_dim()), 20, 1);
  for (const auto& s : S.samples) EXPECT_EQ(s.y, fam.space().outputs.front());
}

TEST(Seeds, RepetitionStreamsAreDistinct) {
  auto fam = StructureFamily::parse("set");
  std::set<std::uint64_t> seen;
  for (std::size_t r = 0; r < 30; ++r) {
    auto s = repetition_seeds(1, r, fam);
    for (auto v : {s.ground_truth, s.train_x, s.test_x, s.proposal}) EXPECT_TRUE(seen.insert(v).second);
  }
  EXPECT_NE(repetition_seeds(1, 0, fam).ground_truth,
            repetition_seeds(1, 0, StructureFamily::parse("tree")).ground_truth);
}

TEST(Summary, IdenticalValuesHaveZeroWidth) {
  std::vector<double> v(5, 0.25);
  auto r = mean_ci95(v);
  EXPECT_EQ(r.mean, 0.25);
  EXPECT_EQ(r.ci_low, 0.25);
  EXPECT_EQ(r.ci_high, 0.25);
}

TEST(Summary, TwoValuesUseStudentTWithOneDegree) {
  std::vector<double> v{0.0, 1.0};
  auto r = mean_ci95(v);
  EXPECT_DOUBLE_EQ(r.mean, 0.5);
  // t_{0.975}(1) = tan(0.475 pi); standard error 0.5.
  const double half = std::tan(0.475 * std::numbers::pi) * 0.5;
  EXPECT_NEAR(r.half_width(), half, 1e-9);
  EXPECT_NEAR(r.ci_low, 0.5 - half, 1e-9);
  auto single = std::vector<double>{3.0};
  EXPECT_TRUE(std::isnan(mean_ci95(single).ci_low));
}

TEST(Summary, ColumnsAndAggregation) {
  std::vector<MetricsRecord> recs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    recs[i].family = "set:4:15";
    recs[i].method = Method::CrfRand;
    recs[i].test_hamming = static_cast<double>(i);
    recs[i].repetition = i;
  }
  recs[2].status = "failed: boom";
  auto rows = summarize(recs);
  std::set<std::string> metrics;
  for (const auto& r : rows) metrics.insert(r.metric);
  EXPECT_EQ(metrics, std::set<std::string>(metric_names().begin(), metric_names().end()));
  EXPECT_EQ(metric_names().size(), metric_values(recs[0]).size());
  auto* h = find_summary(rows, "set:4:15", Method::CrfRand, "test_hamming");
  ASSERT_NE(h, nullptr);
  EXPECT_EQ(h->n, 2u);
  EXPECT_DOUBLE_EQ(h->mean, 0.5);
  auto* beta = find_summary(rows, "set:4:15", Method::CrfRand, "beta");
  EXPECT_EQ(beta->n, 0u);
}

TEST(Io, DatasetRoundTrip) {
  Rng rng(1);
  for (const char* spec : {"set:4:15", "dag:5:2", "tree:6", "set:1:3"}) {
    auto fam = StructureFamily::parse(spec);
    for (int trial = 0; trial < 5; ++trial) {
      auto S = random_dataset(fam, 1 + uniform_index(rng, 30), rng);
      std::stringstream ss;
      write_dataset(ss, S);
      auto back = read_dataset(ss, fam);
      EXPECT_EQ(back.samples, S.samples) << spec;
    }
  }
}

TEST(Io, DatasetErrors) {
  auto fam = StructureFamily::subset(2, 4);
  std::stringstream bad_json("{\"x\": \"111111\", \"y\": [0, 1]}\n{oops\n");
  EXPECT_THROW(read_dataset(bad_json, fam), std::runtime_error);
  std::stringstream bad_label("{\"x\": \"111111\", \"y\": [0, 1, 2]}\n");
  EXPECT_THROW(read_dataset(bad_label, fam), std::invalid_argument);
  std::stringstream dup("{\"x\": \"111111\", \"y\": [1, 1]}\n");
  EXPECT_THROW(read_dataset(dup, fam), std::runtime_error);
  std::stringstream bits("{\"x\": \"1121\", \"y\": [0, 1]}\n");
  EXPECT_THROW(read_dataset(bits, fam), std::runtime_error);
}

TEST(Io, WeightsRoundTripExactly) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto w = random_weights(1 + uniform_index(rng, 50), rng, std::pow(10.0, 6.0 * uniform01(rng) - 3.0), 0.7);
    std::stringstream ss;
    write_weights(ss, w);
    EXPECT_EQ(read_weights(ss), w);
  }
  std::stringstream obj("{\"w\": 1}");
  EXPECT_THROW(read_weights(obj), std::runtime_error);
}

TEST(Io, CsvWriters) {
  std::stringstream ss;
  write_metrics(ss, {MetricsRecord{}});
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(split_csv_line(header), metrics_columns());
  std::string row;
  std::getline(ss, row);
  EXPECT_EQ(split_csv_line(row).size(), metrics_columns().size());

  TrainTrace trace;
  trace.rows.push_back({1, 0.5, 0.25, 0.1, 0.0, 0});
  std::stringstream ts;
  write_trace(ts, "r0", Method::CrfAll, trace);
  EXPECT_EQ(ts.str(), std::string(kTraceCsvHeader) + "\nr0,crf_all,1,0.5,0.25,0.10000000000000001\n");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.families = {"tree:4"};
  c.methods = {Method::SvmRand};
  c.beta = 0.3;
  c.n_target = 4;
  c.seed = 99;
  auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.proposals_per_sample(), 4u);
  EXPECT_EQ(ExperimentConfig{}.proposals_per_sample(), 10u);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json{{"repetitions", 0}}), std::invalid_argument);
}

TEST(Experiment, SmokeSingleRecord) {
  ExperimentConfig cfg;
  cfg.families = {"set:4:15"};
  cfg.repetitions = 1;
  cfg.methods = {Method::CrfAll};
  cfg.m_train = cfg.m_test = 20;
  cfg.iterations = 3;
  auto recs = run_experiment(cfg);
  ASSERT_EQ(recs.size(), 1u);
  const auto& r = recs[0];
  EXPECT_EQ(r.status, "ok");
  for (double v : {r.train_loss, r.train_exact_loss, r.test_crf_loss, r.test_hamming}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_TRUE(std::isnan(r.set_size_mean));
  EXPECT_GT(r.total_bound, 0.0);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  ExperimentConfig cfg;
  cfg.families = {"set:3:7", "tree:4"};
  cfg.repetitions = 3;
  cfg.m_train = cfg.m_test = 15;
  cfg.iterations = 4;
  auto a = run_experiment(cfg);
  cfg.threads = 3;
  auto b = run_experiment(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].run_id, b[i].run_id);
    EXPECT_EQ(a[i].method, b[i].method);
    auto va = metric_values(a[i]), vb = metric_values(b[i]);
    for (std::size_t j = 0; j < va.size(); ++j) {
      if (is_timing_column(metric_names()[j])) continue;
      EXPECT_EQ(format_double(va[j]), format_double(vb[j])) << metric_names()[j];
    }
  }
}

TEST(Experiment, RandomizedTrainLossBelowExact) {
  ExperimentConfig cfg;
  cfg.families = {"dag:4:2"};
  cfg.repetitions = 2;
  cfg.methods = {Method::CrfRand, Method::SvmRand};
  cfg.m_train = cfg.m_test = 25;
  cfg.iterations = 5;
  for (const auto& r : run_experiment(cfg)) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_LE(r.train_loss, r.train_exact_loss + 1e-12);
    EXPECT_GE(r.set_size_mean, 1.0);
    EXPECT_GE(r.assumption_rate, 0.0);
    EXPECT_LE(r.assumption_rate, 1.0);
  }
}

TEST(Experiment, FailuresAreRecordedNotThrown) {
  ExperimentConfig cfg;
  cfg.families = {"set:4:15"};
  cfg.repetitions = 1;
  cfg.methods = {Method::CrfAll};
  cfg.m_train = 1;  // beta schedule undefined for m = 1
  auto recs = run_experiment(cfg);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_NE(recs[0].status, "ok");
  EXPECT_TRUE(std::isnan(recs[0].test_hamming));
}
