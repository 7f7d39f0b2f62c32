// Command-line front end: synth | anonymize | extract | detect | rank | select
// | serve | bench.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fraudlens/anomaly.hpp"
#include "fraudlens/bench.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/features.hpp"
#include "fraudlens/heatmap.hpp"
#include "fraudlens/ingest.hpp"
#include "fraudlens/server.hpp"
#include "fraudlens/synth.hpp"

namespace fl = fraudlens;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw fl::Error(fl::ErrorKind::IoFailure, "cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fl::Error(fl::ErrorKind::IoFailure, "cannot open '" + path + "'");
  return in;
}

std::string sidecar_path(const std::string& out) {
  const std::string suffix = ".csv";
  if (out.size() > suffix.size() && out.ends_with(suffix)) {
    return out.substr(0, out.size() - suffix.size()) + ".truth.csv";
  }
  return out + ".truth.csv";
}

fl::IsolationForestParams forest_params(std::size_t trees, std::size_t subsample,
                                        std::uint64_t seed, std::size_t n_rows) {
  fl::IsolationForestParams p;
  p.n_trees = trees;
  p.subsample_size = std::min(subsample, n_rows);
  p.seed = seed;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lockstep fraud analytics: synthetic data, features, flags, ranking, server"};
  app.require_subcommand(1);

  // synth
  std::string synth_config, synth_out, synth_truth;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
  synth->add_option("--config", synth_config, "key = value config file");
  synth->add_option("--out", synth_out, "Output transactions CSV")->required();
  synth->add_option("--truth", synth_truth, "Ground-truth CSV (default: <out>.truth.csv)");
  synth->add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { synth_seed = s, synth_seed_set = true; },
      "Overrides the config seed");

  // anonymize
  std::string anon_input, anon_out;
  auto* anon = app.add_subcommand(
      "anonymize", "Hash IDs and remap years/months; the salt comes from FRAUDLENS_SALT");
  anon->add_option("--input", anon_input, "Transactions CSV")->required();
  anon->add_option("--out", anon_out, "Output CSV")->required();

  // extract
  std::string extract_input, extract_out;
  auto* extract = app.add_subcommand("extract", "Per-card feature table");
  extract->add_option("--input", extract_input, "Transactions CSV")->required();
  extract->add_option("--out", extract_out, "Features CSV")->required();

  // detect
  std::string detect_input, detect_params, detect_out;
  auto* detect_cmd = app.add_subcommand("detect", "Automatic flags and classes per card");
  detect_cmd->add_option("--input", detect_input, "Transactions CSV")->required();
  detect_cmd->add_option("--params", detect_params, "Flag thresholds, key = value");
  detect_cmd->add_option("--out", detect_out, "card_id,class CSV")->required();

  // rank
  std::string rank_features, rank_labels, rank_out;
  std::vector<std::string> rank_columns = fl::kDefaultScoringFeatures;
  std::size_t rank_trees = 100, rank_subsample = 256;
  std::uint64_t rank_seed = 0;
  auto* rank = app.add_subcommand("rank", "Isolation-forest anomaly scores");
  rank->add_option("--features", rank_features, "Features CSV")->required();
  rank->add_option("--labels", rank_labels, "card_id,label CSV for AP / Prec@k");
  rank->add_option("--out", rank_out, "card_id,score CSV")->required();
  rank->add_option("--use", rank_columns, "Feature columns to score on");
  rank->add_option("--trees", rank_trees, "Number of trees");
  rank->add_option("--subsample", rank_subsample, "Subsample size per tree");
  rank->add_option("--seed", rank_seed, "Random seed");

  // select
  std::string select_features, select_labels;
  std::vector<std::string> select_candidates;
  std::size_t select_max_k = 5;
  std::uint64_t select_seed = 0;
  double select_epsilon = 0.001;
  auto* select = app.add_subcommand("select", "Forward feature selection; prints the growth curve");
  select->add_option("--features", select_features, "Features CSV")->required();
  select->add_option("--labels", select_labels, "card_id,label CSV")->required();
  select->add_option("--max-k", select_max_k, "Maximum number of features");
  select->add_option("--candidates", select_candidates, "Candidate columns (default: all)");
  select->add_option("--seed", select_seed, "Random seed");
  select->add_option("--epsilon", select_epsilon, "Minimum AP gain to keep adding");

  // serve
  std::string serve_input, serve_params, serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for one dataset");
  serve_cmd->add_option("--input", serve_input, "Transactions CSV")->required();
  serve_cmd->add_option("--params", serve_params, "Flag thresholds, key = value");
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port");

  // bench
  std::vector<std::size_t> bench_sizes = {100000, 200000, 400000, 800000, 1600000, 3200000};
  std::string bench_config, bench_out;
  std::uint64_t bench_seed = 0;
  std::size_t bench_reps = 1;
  auto* bench = app.add_subcommand("bench", "Time the preprocessing pipeline over sizes");
  bench->add_option("--sizes", bench_sizes, "Txn counts, ascending")->delimiter(',');
  bench->add_option("--config", bench_config, "Synth config for the datasets");
  bench->add_option("--seed", bench_seed, "Random seed");
  bench->add_option("--reps", bench_reps, "Repetitions per size (minimum is reported)");
  bench->add_option("--out", bench_out, "CSV output (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      fl::SynthConfig config;
      if (!synth_config.empty()) config = fl::parse_synth_config_file(synth_config);
      if (synth_seed_set) config.seed = synth_seed;
      const fl::SynthResult result = fl::generate(config);
      fl::write_dataset_file(result.dataset, synth_out);
      auto truth = open_out(synth_truth.empty() ? sidecar_path(synth_out) : synth_truth);
      fl::write_ground_truth(result.ground_truth, truth);
      std::cerr << "wrote " << result.dataset.size() << " txns for "
                << result.dataset.n_cards() << " cards\n";
    } else if (*anon) {
      const char* salt = std::getenv("FRAUDLENS_SALT");
      if (salt == nullptr || *salt == '\0') {
        throw fl::Error(fl::ErrorKind::InvalidParams, "FRAUDLENS_SALT is not set");
      }
      fl::write_dataset_file(fl::anonymize(fl::parse_transactions_file(anon_input), salt),
                             anon_out);
    } else if (*extract) {
      const fl::FeatureTable table =
          fl::extract_features(fl::parse_transactions_file(extract_input));
      auto out = open_out(extract_out);
      fl::write_features(table, out);
    } else if (*detect_cmd) {
      const fl::FlagParams params =
          detect_params.empty() ? fl::FlagParams{} : fl::parse_flag_params_file(detect_params);
      const auto classes =
          fl::detect(fl::extract_features(fl::parse_transactions_file(detect_input)), params);
      auto out = open_out(detect_out);
      out << "card_id,class\n";
      for (const auto& [card, cls] : classes) out << card << ',' << fl::to_string(cls) << '\n';
    } else if (*rank) {
      auto in = open_in(rank_features);
      const fl::FeatureTable table = fl::read_features(in);
      const fl::FeatureMatrix fm = fl::FeatureMatrix::from_table(table, rank_columns);
      const fl::Matrix data = fm.select(rank_columns);
      const auto model = fl::IsolationForestModel::fit(
          data, forest_params(rank_trees, rank_subsample, rank_seed, data.n_rows));
      const std::vector<double> scores = model.score_all(data);
      auto out = open_out(rank_out);
      out << "card_id,score\n";
      out.precision(17);
      for (std::size_t i = 0; i < table.size(); ++i) {
        out << table[i].card_id << ',' << scores[i] << '\n';
      }
      if (!rank_labels.empty()) {
        auto lin = open_in(rank_labels);
        const auto labels = fl::align_labels(table, fl::read_binary_labels(lin));
        const std::vector<std::size_t> ks = {100, 1000};
        const fl::RankingMetrics m = fl::evaluate_ranking(scores, labels, ks);
        std::cout << "metric,value\naverage_precision," << m.average_precision << '\n';
        for (const auto& [k, p] : m.precision_at_k) std::cout << "prec@" << k << ',' << p << '\n';
      }
    } else if (*select) {
      auto in = open_in(select_features);
      const fl::FeatureTable table = fl::read_features(in);
      auto lin = open_in(select_labels);
      const auto labels = fl::align_labels(table, fl::read_binary_labels(lin));
      if (select_candidates.empty()) {
        select_candidates.assign(fl::kFeatureNames.begin(), fl::kFeatureNames.end());
      }
      const fl::FeatureMatrix fm = fl::FeatureMatrix::from_table(table, select_candidates);
      fl::SelectionOptions options;
      options.forest.seed = select_seed;
      options.epsilon = select_epsilon;
      const fl::SelectionResult r = fl::forward_select(
          fm, labels, select_candidates, std::min(select_max_k, select_candidates.size()),
          options);
      std::cout << "step,feature,average_precision\n";
      for (std::size_t i = 0; i < r.steps.size(); ++i) {
        std::cout << i + 1 << ',' << r.steps[i].feature << ','
                  << r.steps[i].average_precision << '\n';
      }
    } else if (*serve_cmd) {
      fl::SessionOptions options;
      if (!serve_params.empty()) options.flags = fl::parse_flag_params_file(serve_params);
      fl::Session session(fl::parse_transactions_file(serve_input), options);
      std::cerr << "serving " << session.dataset().size() << " txns on " << serve_host << ':'
                << serve_port << '\n';
      fl::serve(session, serve_host, serve_port);
    } else if (*bench) {
      fl::SynthConfig config;
      if (!bench_config.empty()) config = fl::parse_synth_config_file(bench_config);
      const auto rows = fl::run_bench(config, bench_sizes, bench_seed, bench_reps);
      if (bench_out.empty()) {
        fl::write_bench_csv(rows, std::cout);
      } else {
        auto out = open_out(bench_out);
        fl::write_bench_csv(rows, out);
      }
    }
  } catch (const fl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
