// Synthetic experiment protocol: ground-truth generation, data generation,
// training every method on identical data per repetition, evaluation, and
// aggregation into means with t-based 95% confidence intervals.
//
// Seed discipline: master seed -> repetition -> family -> named streams
// ("ground-truth", "train-x", "test-x", "proposal"). All methods of one
// repetition see the same data.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "pmap/bounds.hpp"
#include "pmap/gumbel_crf.hpp"
#include "pmap/io.hpp"
#include "pmap/losses.hpp"
#include "pmap/proposal.hpp"
#include "pmap/rng.hpp"
#include "pmap/spaces.hpp"
#include "pmap/trainer.hpp"

namespace pmap {

struct ExperimentConfig {
  std::vector<std::string> families{"set:4:15", "dag:5:2", "tree:6"};
  std::size_t m_train = 100;
  std::size_t m_test = 100;
  std::size_t repetitions = 30;
  std::vector<Method> methods{Method::CrfAll, Method::CrfRand, Method::SvmAll, Method::SvmRand};
  double l1_lambda = 0.01;
  std::size_t iterations = 20;
  double step0 = 1.0;
  std::optional<double> beta;           ///< unset: beta_schedule(m_train, r)
  std::size_t k = 2;                    ///< proposal neighborhood radius
  std::optional<std::size_t> n_target;  ///< unset: ceil(sqrt(m_train))
  bool resample_each_iter = true;
  std::uint64_t seed = 20190101;
  std::size_t threads = 1;
  std::size_t enumeration_budget = StructureFamily::kDefaultEnumerationBudget;
  double bound_delta = 0.05;

  void validate() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (m_train < 1 || m_test < 1) throw std::invalid_argument("sample counts must be >= 1");
    if (families.empty() || methods.empty())
      throw std::invalid_argument("need at least one family and one method");
  }

  std::size_t proposals_per_sample() const { return n_target.value_or(default_n_target(m_train)); }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("families")) c.families = j["families"].get<std::vector<std::string>>();
    if (j.contains("family")) c.families = {j["family"].get<std::string>()};
    c.m_train = j.value("m_train", c.m_train);
    c.m_test = j.value("m_test", c.m_test);
    c.repetitions = j.value("repetitions", c.repetitions);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.l1_lambda = j.value("l1_lambda", c.l1_lambda);
    c.iterations = j.value("iterations", c.iterations);
    c.step0 = j.value("step0", c.step0);
    if (j.contains("beta") && !j["beta"].is_null()) c.beta = j["beta"].get<double>();
    c.k = j.value("k", c.k);
    if (j.contains("n_target") && !j["n_target"].is_null())
      c.n_target = j["n_target"].get<std::size_t>();
    c.resample_each_iter = j.value("resample_each_iter", c.resample_each_iter);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.enumeration_budget = j.value("enumeration_budget", c.enumeration_budget);
    c.bound_delta = j.value("bound_delta", c.bound_delta);
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["families"] = families;
    j["m_train"] = m_train;
    j["m_test"] = m_test;
    j["repetitions"] = repetitions;
    std::vector<std::string> ms;
    for (Method m : methods) ms.emplace_back(to_string(m));
    j["methods"] = ms;
    j["l1_lambda"] = l1_lambda;
    j["iterations"] = iterations;
    j["step0"] = step0;
    j["beta"] = beta ? nlohmann::json(*beta) : nlohmann::json(nullptr);
    j["k"] = k;
    j["n_target"] = n_target ? nlohmann::json(*n_target) : nlohmann::json(nullptr);
    j["resample_each_iter"] = resample_each_iter;
    j["seed"] = seed;
    j["threads"] = threads;
    j["enumeration_budget"] = enumeration_budget;
    j["bound_delta"] = bound_delta;
    return j;
  }

  TrainConfig train_config(Method method, std::uint64_t proposal_seed) const {
    TrainConfig t;
    t.method = method;
    t.l1_lambda = l1_lambda;
    t.iterations = iterations;
    t.step0 = step0;
    t.beta = beta;
    t.resample_each_iter = resample_each_iter;
    t.seed = proposal_seed;
    return t;
  }

  ProposalConfig proposal_config() const {
    ProposalConfig p;
    p.k = k;
    p.n_target = proposals_per_sample();
    return p;
  }
};

/// One (repetition, family, method) outcome. Losses are NaN when the run
/// failed (status != "ok") or the quantity does not apply.
struct MetricsRecord {
  std::string run_id;
  std::size_t repetition = 0;
  std::string family;
  Method method = Method::CrfAll;
  std::string status = "ok";
  double beta = std::numeric_limits<double>::quiet_NaN();
  double train_loss = std::numeric_limits<double>::quiet_NaN();        ///< exact or randomized CRF loss
  double train_exact_loss = std::numeric_limits<double>::quiet_NaN();  ///< exact CRF loss on train
  double test_crf_loss = std::numeric_limits<double>::quiet_NaN();
  double test_hamming = std::numeric_limits<double>::quiet_NaN();
  double train_seconds = std::numeric_limits<double>::quiet_NaN();
  double set_size_mean = std::numeric_limits<double>::quiet_NaN();
  double set_size_max = std::numeric_limits<double>::quiet_NaN();
  double w_support = std::numeric_limits<double>::quiet_NaN();
  double w_l1 = std::numeric_limits<double>::quiet_NaN();
  double assumption_rate = std::numeric_limits<double>::quiet_NaN();
  double total_bound = std::numeric_limits<double>::quiet_NaN();
};

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "run_id",        "repetition",   "family",        "method",        "status",
      "beta",          "train_loss",   "train_exact_loss", "test_crf_loss", "test_hamming",
      "train_seconds", "set_size_mean", "set_size_max", "w_support",     "w_l1",
      "assumption_rate", "total_bound"};
  return cols;
}

/// Numeric metric columns, in schema order; the ones summarize() aggregates.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names(metrics_columns().begin() + 5, metrics_columns().end());
  return names;
}

inline std::vector<double> metric_values(const MetricsRecord& r) {
  return {r.beta,          r.train_loss,    r.train_exact_loss, r.test_crf_loss,
          r.test_hamming,  r.train_seconds, r.set_size_mean,    r.set_size_max,
          r.w_support,     r.w_l1,          r.assumption_rate,  r.total_bound};
}

/// Columns excluded when comparing two runs for determinism.
inline bool is_timing_column(std::string_view name) { return name == "train_seconds"; }

inline void write_metrics_header(std::ostream& os) {
  const auto& cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline void write_metrics_row(std::ostream& os, const MetricsRecord& r) {
  std::string status = r.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  os << r.run_id << ',' << r.repetition << ',' << r.family << ',' << to_string(r.method) << ','
     << status;
  for (double v : metric_values(r)) os << ',' << format_double(v);
  os << '\n';
}

inline void write_metrics(std::ostream& os, const std::vector<MetricsRecord>& records) {
  write_metrics_header(os);
  for (const auto& r : records) write_metrics_row(os, r);
}

// ---------------------------------------------------------------------------
// Data generation

/// w* with N(0, 100) entries on ceil(sqrt(d)) uniformly chosen coordinates.
inline WeightVector generate_ground_truth(const StructureFamily& family, std::uint64_t seed) {
  const std::size_t d = family.feature_dim();
  if (d < 1) throw std::invalid_argument("generate_ground_truth: d must be >= 1");
  auto s = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  while (s > 1 && (s - 1) * (s - 1) >= d) --s;
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 10.0);
  std::vector<double> values(d);
  for (auto& v : values) v = normal(rng);
  std::vector<std::size_t> idx(d);
  for (std::size_t i = 0; i < d; ++i) idx[i] = i;
  for (std::size_t i = 0; i < s; ++i) std::swap(idx[i], idx[i + uniform_index(rng, d - i)]);
  WeightVector w(d);
  for (std::size_t i = 0; i < s; ++i) w[idx[i]] = values[idx[i]];
  return w;
}

/// m samples with x ~ Bernoulli(1/2)^d and y = f_{w*}(x).
inline Dataset generate_dataset(const StructureFamily& family, const WeightVector& w_star,
                                std::size_t m, std::uint64_t seed) {
  check_weights(family, w_star);
  auto rng = make_rng(seed);
  Dataset S{family, {}};
  S.samples.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Sample s;
    s.x.bits.resize(family.feature_dim());
    for (auto& b : s.x.bits) b = uniform01(rng) < 0.5;
    s.y = map_decode(family, s.x, w_star);
    S.samples.push_back(std::move(s));
  }
  return S;
}

struct RepetitionSeeds {
  std::uint64_t ground_truth;
  std::uint64_t train_x;
  std::uint64_t test_x;
  std::uint64_t proposal;
};

inline RepetitionSeeds repetition_seeds(std::uint64_t master, std::size_t repetition,
                                        const StructureFamily& family) {
  const auto base = derive_seed(derive_seed(master, "repetition", repetition), family.name());
  return {derive_seed(base, "ground-truth"), derive_seed(base, "train-x"),
          derive_seed(base, "test-x"), derive_seed(base, "proposal")};
}

// ---------------------------------------------------------------------------
// Evaluation

/// Fills the post-training metrics of `rec` from a finished run.
inline void evaluate_run(const ExperimentConfig& cfg, const Dataset& train_set,
                         const Dataset& test_set, const TrainResult& res, MetricsRecord& rec) {
  rec.beta = res.beta;
  rec.train_seconds = res.seconds;
  rec.train_exact_loss = exact_crf_loss(res.w, train_set, res.beta).value;
  rec.train_loss = is_randomized(rec.method)
                       ? randomized_loss(res.w, train_set, res.final_augmented, res.beta).value
                       : rec.train_exact_loss;
  rec.test_crf_loss = exact_crf_loss(res.w, test_set, res.beta).value;
  rec.test_hamming = hamming_loss(res.w, test_set).value;
  rec.w_support = static_cast<double>(res.w.support_size());
  rec.w_l1 = res.w.l1_norm();
  if (is_randomized(rec.method)) {
    double sum = 0.0, mx = 0.0;
    for (const auto& t : res.final_sets) {
      sum += static_cast<double>(t.size());
      mx = std::max(mx, static_cast<double>(t.size()));
    }
    rec.set_size_mean = sum / static_cast<double>(res.final_sets.size());
    rec.set_size_max = mx;
    rec.assumption_rate = assumption_satisfaction_rate(train_set, res.final_sets, res.w, 0.0);
  }
  BoundInputs in;
  in.d = train_set.family.feature_dim();
  in.s = std::max<std::size_t>(1, res.w.support_size());
  in.m = train_set.size();
  in.n = cfg.proposals_per_sample();
  in.r = train_set.family.output_count();
  in.delta = cfg.bound_delta;
  rec.total_bound = total_bound(res.w, in);
}

/// All methods on one (repetition, family).
inline std::vector<MetricsRecord> run_repetition(const ExperimentConfig& cfg,
                                                 const StructureFamily& family,
                                                 std::size_t repetition) {
  const auto seeds = repetition_seeds(cfg.seed, repetition, family);
  std::vector<MetricsRecord> out;
  std::optional<Dataset> train_set, test_set;
  std::string data_error;
  try {
    const auto w_star = generate_ground_truth(family, seeds.ground_truth);
    train_set = generate_dataset(family, w_star, cfg.m_train, seeds.train_x);
    test_set = generate_dataset(family, w_star, cfg.m_test, seeds.test_x);
  } catch (const std::exception& e) {
    data_error = std::string("data generation failed: ") + e.what();
  }
  for (Method method : cfg.methods) {
    MetricsRecord rec;
    rec.run_id = "s" + std::to_string(cfg.seed) + "-r" + std::to_string(repetition);
    rec.repetition = repetition;
    rec.family = family.name();
    rec.method = method;
    if (!data_error.empty()) {
      rec.status = data_error;
    } else {
      try {
        const auto res = train(*train_set, cfg.train_config(method, seeds.proposal),
                               cfg.proposal_config());
        evaluate_run(cfg, *train_set, *test_set, res, rec);
      } catch (const std::exception& e) {
        rec.status = std::string("failed: ") + e.what();
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Thread count from PMAP_THREADS, defaulting to 1.
inline std::size_t threads_from_env() {
  if (const char* v = std::getenv("PMAP_THREADS")) {
    const long n = std::strtol(v, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

/// Every family x repetition x method. Records are ordered by (family order
/// in the config, repetition, method order in the config) regardless of the
/// thread count.
inline std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<StructureFamily> families;
  for (const auto& f : cfg.families) families.push_back(StructureFamily::parse(f, cfg.enumeration_budget));

  const std::size_t jobs = families.size() * cfg.repetitions;
  std::vector<std::vector<MetricsRecord>> results(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs;)
      results[j] = run_repetition(cfg, families[j / cfg.repetitions], j % cfg.repetitions);
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    for (const auto& f : families) (void)f.try_space();  // enumerate before fan-out
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  std::vector<MetricsRecord> out;
  for (auto& r : results)
    for (auto& rec : r) out.push_back(std::move(rec));
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
  std::string family;
  Method method = Method::CrfAll;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  double half_width() const { return 0.5 * (ci_high - ci_low); }
};

/// Mean and two-sided 95% t-interval of `values` (NaN bounds for n < 2).
inline SummaryRow mean_ci95(std::span<const double> values) {
  SummaryRow row;
  row.n = values.size();
  if (values.empty()) {
    row.mean = row.ci_low = row.ci_high = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / static_cast<double>(row.n);
  if (row.n < 2) {
    row.ci_low = row.ci_high = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  const double se = std::sqrt(ss / static_cast<double>(row.n - 1) / static_cast<double>(row.n));
  const boost::math::students_t dist(static_cast<double>(row.n - 1));
  const double half = boost::math::quantile(dist, 0.975) * se;
  row.ci_low = row.mean - half;
  row.ci_high = row.mean + half;
  return row;
}

/// Per (family, method, metric) mean and 95% CI over successful records;
/// NaN entries of a metric are skipped.
inline std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records) {
  std::vector<std::pair<std::string, Method>> groups;
  for (const auto& r : records) {
    std::pair<std::string, Method> key{r.family, r.method};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::vector<SummaryRow> out;
  const auto& names = metric_names();
  for (const auto& [family, method] : groups) {
    for (std::size_t mi = 0; mi < names.size(); ++mi) {
      std::vector<double> vals;
      for (const auto& r : records) {
        if (r.family != family || r.method != method || r.status != "ok") continue;
        const double v = metric_values(r)[mi];
        if (!std::isnan(v)) vals.push_back(v);
      }
      auto row = mean_ci95(vals);
      row.family = family;
      row.method = method;
      row.metric = names[mi];
      out.push_back(std::move(row));
    }
  }
  return out;
}

inline const SummaryRow* find_summary(const std::vector<SummaryRow>& rows, std::string_view family,
                                      Method method, std::string_view metric) {
  for (const auto& r : rows)
    if (r.family == family && r.method == method && r.metric == metric) return &r;
  return nullptr;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "family,method,metric,n,mean,ci_low,ci_high\n";
  for (const auto& r : rows)
    os << r.family << ',' << to_string(r.method) << ',' << r.metric << ',' << r.n << ','
       << format_double(r.mean) << ',' << format_double(r.ci_low) << ','
       << format_double(r.ci_high) << '\n';
}

}  // namespace pmap
