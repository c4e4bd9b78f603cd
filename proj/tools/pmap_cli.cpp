// pmap: command-line front end.
//
//   pmap gen-data  --family set:4:15 --seed 1 --m 100 --out train.jsonl
//   pmap train     --method crf_rand --data train.jsonl --family set:4:15 --out-weights w.json
//   pmap eval      --weights w.json --data test.jsonl --family set:4:15 --metrics m.csv
//   pmap bounds    --grid "m=25,100,400;n=10;s=10;d=100;r=1365;delta=0.05"
//   pmap reproduce --families tree,dag,set --reps 30 --out results.csv
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmap/pmap.hpp"

namespace {

using namespace pmap;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  auto is = open_in(path);
  return ExperimentConfig::from_json(nlohmann::json::parse(is));
}

StructureFamily resolve_family(const std::string& flag, const ExperimentConfig& cfg) {
  if (!flag.empty()) return StructureFamily::parse(flag, cfg.enumeration_budget);
  if (cfg.families.size() == 1) return StructureFamily::parse(cfg.families[0], cfg.enumeration_budget);
  throw std::invalid_argument("--family is required (or a config naming exactly one family)");
}

Dataset load_dataset(const std::string& path, const StructureFamily& family) {
  auto is = open_in(path);
  return read_dataset(is, family);
}

// "m=25,100;n=10;s=10;d=100;r=1365;delta=0.05"
std::map<std::string, std::vector<double>> parse_grid(const std::string& spec) {
  std::map<std::string, std::vector<double>> grid{{"m", {25, 100, 400, 1600}},
                                                  {"n", {10}},
                                                  {"s", {10}},
                                                  {"d", {100}},
                                                  {"r", {1365}},
                                                  {"delta", {0.05}}};
  for (const auto& part : split(spec, ';')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad grid entry: " + part);
    auto key = part.substr(0, eq);
    if (!grid.count(key)) throw std::invalid_argument("unknown grid key: " + key);
    std::vector<double> vals;
    for (const auto& v : split(part.substr(eq + 1), ',')) vals.push_back(std::stod(v));
    if (vals.empty()) throw std::invalid_argument("empty grid entry: " + key);
    grid[key] = vals;
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning perturb-and-MAP structured predictors"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset from a sparse ground truth");
  std::string gen_family, gen_out, gen_weights, gen_split = "train";
  std::uint64_t gen_seed = 0;
  std::size_t gen_m = 100;
  gen->add_option("--family", gen_family, "tree:V | dag:V:P | set:K:N")->required();
  gen->add_option("--seed", gen_seed, "Master seed")->required();
  gen->add_option("--m", gen_m, "Number of samples");
  gen->add_option("--out", gen_out, "Output JSON-lines file")->required();
  gen->add_option("--split", gen_split, "Input stream: train or test (same ground truth)")
      ->check(CLI::IsMember({"train", "test"}));
  gen->add_option("--out-weights", gen_weights, "Also write the ground-truth weights");

  // train
  auto* tr = app.add_subcommand("train", "Learn weights with one method");
  std::string tr_method = "crf_rand", tr_config, tr_data, tr_family, tr_weights, tr_trace,
              tr_run_id = "train";
  std::optional<std::uint64_t> tr_seed;
  tr->add_option("--method", tr_method, "crf_all | crf_rand | svm_all | svm_rand")
      ->check(CLI::IsMember({"crf_all", "crf_rand", "svm_all", "svm_rand"}));
  tr->add_option("--config", tr_config, "Experiment config (JSON)");
  tr->add_option("--data", tr_data, "Training data (JSON lines)")->required();
  tr->add_option("--family", tr_family, "Structure family of the data");
  tr->add_option("--out-weights", tr_weights, "Learned weights (JSON array)")->required();
  tr->add_option("--trace", tr_trace, "Per-iteration trace (CSV)");
  tr->add_option("--seed", tr_seed, "Proposal seed (overrides config)");
  tr->add_option("--run-id", tr_run_id, "run_id column of the trace");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate weights on a dataset");
  std::string ev_weights, ev_data, ev_family, ev_metrics, ev_config, ev_method = "crf_all",
              ev_run_id = "eval";
  std::optional<double> ev_beta;
  ev->add_option("--weights", ev_weights, "Weights (JSON array)")->required();
  ev->add_option("--data", ev_data, "Evaluation data (JSON lines)")->required();
  ev->add_option("--family", ev_family, "Structure family of the data");
  ev->add_option("--metrics", ev_metrics, "Metrics CSV output");
  ev->add_option("--config", ev_config, "Experiment config (JSON)");
  ev->add_option("--beta", ev_beta, "CRF temperature (default: schedule from m and r)");
  ev->add_option("--method", ev_method, "method column label");
  ev->add_option("--run-id", ev_run_id, "run_id column");

  // bounds
  auto* bd = app.add_subcommand("bounds", "Tabulate the generalization bounds over a grid");
  std::string bd_grid;
  double bd_l1 = 0.0;
  bd->add_option("--grid", bd_grid, "e.g. \"m=25,100,400;n=10;s=10;d=100;r=1365;delta=0.05\"");
  bd->add_option("--w-l1", bd_l1, "||w||_1 used by the approximation term");

  // reproduce
  auto* rp = app.add_subcommand("reproduce", "Run the synthetic comparison of all methods");
  std::string rp_families = "tree,dag,set", rp_out, rp_summary, rp_config, rp_methods;
  std::optional<std::size_t> rp_reps, rp_threads, rp_m;
  std::optional<std::uint64_t> rp_seed;
  rp->add_option("--families", rp_families, "Comma-separated family specs");
  rp->add_option("--reps", rp_reps, "Repetitions");
  rp->add_option("--out", rp_out, "Per-run metrics CSV")->required();
  rp->add_option("--summary", rp_summary, "Mean / 95% CI CSV (default: <out>.summary.csv)");
  rp->add_option("--config", rp_config, "Experiment config (JSON)");
  rp->add_option("--seed", rp_seed, "Master seed");
  rp->add_option("--methods", rp_methods, "Comma-separated subset of methods");
  rp->add_option("--m", rp_m, "Training and test set size");
  rp->add_option("--threads", rp_threads, "Worker threads (default: PMAP_THREADS or 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto family = StructureFamily::parse(gen_family);
      const auto seeds = repetition_seeds(gen_seed, 0, family);
      const auto w_star = generate_ground_truth(family, seeds.ground_truth);
      const auto S = generate_dataset(family, w_star, gen_m,
                                      gen_split == "train" ? seeds.train_x : seeds.test_x);
      auto os = open_out(gen_out);
      write_dataset(os, S);
      if (!gen_weights.empty()) {
        auto ws = open_out(gen_weights);
        write_weights(ws, w_star);
      }
    } else if (*tr) {
      auto cfg = load_config(tr_config);
      const auto family = resolve_family(tr_family, cfg);
      const auto S = load_dataset(tr_data, family);
      cfg.m_train = S.size();
      const auto method = parse_method(tr_method);
      const auto tcfg = cfg.train_config(method, tr_seed.value_or(derive_seed(cfg.seed, "proposal")));
      const auto res = train(S, tcfg, cfg.proposal_config());
      auto ws = open_out(tr_weights);
      write_weights(ws, res.w);
      if (!tr_trace.empty()) {
        auto ts = open_out(tr_trace);
        write_trace(ts, tr_run_id, method, res.trace);
      }
      std::cerr << to_string(method) << ": final objective " << res.trace.rows.back().objective
                << ", " << res.seconds << " s\n";
    } else if (*ev) {
      const auto cfg = load_config(ev_config);
      const auto family = resolve_family(ev_family, cfg);
      const auto S = load_dataset(ev_data, family);
      auto is = open_in(ev_weights);
      const auto w = read_weights(is);
      const double beta = ev_beta ? *ev_beta
                          : cfg.beta ? *cfg.beta
                                     : beta_schedule(S.size(), family.output_count());
      MetricsRecord rec;
      rec.run_id = ev_run_id;
      rec.family = family.name();
      rec.method = parse_method(ev_method);
      rec.beta = beta;
      const auto crf = exact_crf_loss(w, S, beta);
      const auto ham = hamming_loss(w, S);
      rec.test_crf_loss = crf.value;
      rec.test_hamming = ham.value;
      rec.w_support = static_cast<double>(w.support_size());
      rec.w_l1 = w.l1_norm();
      std::cout << kLossCsvHeader << '\n';
      write_loss_row(std::cout, ev_run_id, ev_method, crf);
      write_loss_row(std::cout, ev_run_id, ev_method, ham);
      if (!ev_metrics.empty()) {
        auto ms = open_out(ev_metrics);
        write_metrics(ms, {rec});
      }
    } else if (*bd) {
      const auto grid = parse_grid(bd_grid);
      std::vector<double> w_vals{bd_l1};
      const WeightVector w(w_vals);
      std::cout << "m,n,s,d,r,delta,eps,eps1,eps2,total\n";
      for (double m : grid.at("m"))
        for (double n : grid.at("n"))
          for (double s : grid.at("s"))
            for (double d : grid.at("d"))
              for (double r : grid.at("r"))
                for (double delta : grid.at("delta")) {
                  BoundInputs in{static_cast<std::size_t>(d), static_cast<std::size_t>(s),
                                 static_cast<std::size_t>(m), static_cast<std::size_t>(n),
                                 static_cast<std::size_t>(r), delta};
                  std::cout << in.m << ',' << in.n << ',' << in.s << ',' << in.d << ',' << in.r
                            << ',' << format_double(delta) << ','
                            << format_double(gen_bound_eps(in.d, in.s, in.m, in.r, delta)) << ','
                            << format_double(approx_error_eps1(in.m, w)) << ','
                            << format_double(stat_error_eps2(in.d, in.s, in.n, in.r, in.m, delta))
                            << ',' << format_double(total_bound(w, in)) << '\n';
                }
    } else if (*rp) {
      auto cfg = load_config(rp_config);
      if (rp_config.empty() || rp->count("--families")) cfg.families = split(rp_families, ',');
      if (rp_reps) cfg.repetitions = *rp_reps;
      if (rp_seed) cfg.seed = *rp_seed;
      if (rp_m) cfg.m_train = cfg.m_test = *rp_m;
      if (!rp_methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : split(rp_methods, ',')) cfg.methods.push_back(parse_method(m));
      }
      cfg.threads = rp_threads.value_or(rp_config.empty() ? threads_from_env() : cfg.threads);
      const auto records = run_experiment(cfg);
      {
        auto os = open_out(rp_out);
        write_metrics(os, records);
      }
      auto ss = open_out(rp_summary.empty() ? rp_out + ".summary.csv" : rp_summary);
      write_summary(ss, summarize(records));
      std::size_t failed = 0;
      for (const auto& r : records) failed += r.status != "ok";
      std::cerr << records.size() << " runs, " << failed << " failed\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
