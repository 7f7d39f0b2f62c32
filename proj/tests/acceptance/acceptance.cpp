// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../oracles.hpp"
#include "fraudlens/anomaly.hpp"
#include "fraudlens/bench.hpp"
#include "fraudlens/dashboard.hpp"
#include "fraudlens/features.hpp"
#include "fraudlens/graph.hpp"
#include "fraudlens/heatmap.hpp"
#include "fraudlens/server.hpp"
#include "fraudlens/synth.hpp"

namespace fl = fraudlens;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Criterion-3 dataset: 100k honest cards plus 20 cards of each archetype.
const fl::SynthResult& archetype_dataset() {
  static const fl::SynthResult r = [] {
    fl::SynthConfig c;
    c.n_honest_cards = 100000;
    c.archetypes = {fl::ArchetypeSpec::double_machine_gun(20),
                    fl::ArchetypeSpec::penny_hunter(20), fl::ArchetypeSpec::bursty_poster(20)};
    c.seed = 2021;
    return fl::generate(c);
  }();
  return r;
}

const fl::FeatureTable& archetype_features() {
  static const fl::FeatureTable t = fl::extract_features(archetype_dataset().dataset);
  return t;
}

std::vector<std::uint8_t> archetype_labels() {
  const auto& truth = archetype_dataset().ground_truth;
  std::vector<std::uint8_t> y;
  for (const fl::CardFeatures& f : archetype_features().rows()) {
    y.push_back(truth.at(f.card_id) != fl::CardKind::Honest);
  }
  return y;
}

Outcome feature_oracle() {
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, cards = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const fl::Dataset d = oracle::random_dataset(seed);
    const fl::FeatureTable got = fl::extract_features(d);
    const auto want = oracle::brute_features(d);
    cards += want.size();
    if (got.size() != want.size()) {
      ++mismatches;
      continue;
    }
    for (const fl::CardFeatures& w : want) {
      const auto i = got.find(w.card_id);
      if (!i || !(got[*i] == w)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "100 datasets, %zu cards, %zu mismatches, %.2f s (limit 10 s)",
                cards, mismatches, secs);
  return {mismatches == 0 && secs < 10.0, buf};
}

Outcome linearity(std::size_t reps) {
  const std::vector<std::size_t> sizes = {100000, 200000, 400000, 800000, 1600000, 3200000};
  fl::SynthConfig base;
  base.archetypes = {fl::ArchetypeSpec::double_machine_gun(20),
                     fl::ArchetypeSpec::penny_hunter(20), fl::ArchetypeSpec::bursty_poster(20)};
  const auto rows = fl::run_bench(base, sizes, 7, reps);
  std::string detail;
  double worst = 0.0;
  char buf[96];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%zu:%.3fus", i ? " " : "", rows[i].n_txns,
                  rows[i].per_txn_us);
    detail += buf;
    if (i > 0) {
      worst = std::max(worst, std::abs(rows[i].per_txn_us / rows[i - 1].per_txn_us - 1.0));
    }
  }
  const double largest = rows.back().wall_seconds;
  std::snprintf(buf, sizeof buf, "; max step change %.1f%% (limit 25%%), 3.2M in %.1f s",
                100.0 * worst, largest);
  detail += buf;
  return {worst < 0.25 && largest < 600.0, detail};
}

Outcome archetype_detection() {
  const auto& truth = archetype_dataset().ground_truth;
  const auto classes = fl::detect(archetype_features());
  std::size_t injected = 0, recovered = 0, honest = 0, honest_flagged = 0;
  for (const auto& [card, kind] : truth) {
    const fl::CardClass got = classes.at(card);
    if (kind == fl::CardKind::Honest) {
      ++honest;
      honest_flagged += got != fl::CardClass::Unlabeled;
      continue;
    }
    ++injected;
    const fl::CardClass want = kind == fl::CardKind::DoubleMachineGun
                                   ? fl::CardClass::DoubleMachineGun
                                   : kind == fl::CardKind::PennyHunter ? fl::CardClass::PennyHunter
                                                                       : fl::CardClass::BurstyPoster;
    recovered += got == want;
  }
  const double recall = static_cast<double>(recovered) / static_cast<double>(injected);
  const double fpr = static_cast<double>(honest_flagged) / static_cast<double>(honest);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "recovered %zu/%zu (%.1f%%, need 95%%), honest flagged %zu/%zu (%.3f%%, limit 1%%)",
                recovered, injected, 100.0 * recall, honest_flagged, honest, 100.0 * fpr);
  return {recall >= 0.95 && fpr < 0.01, buf};
}

fl::BipartiteGraph random_graph(fl::SplitMix64& rng) {
  const std::size_t total = 2 + rng.below(29);
  const std::size_t cards = 1 + rng.below(total - 1);
  const std::size_t merchants = total - cards;
  const double p = 0.05 + 0.6 * rng.uniform();
  std::vector<std::string> ct, mt;
  for (std::size_t i = 0; i < cards; ++i) ct.push_back("c" + std::to_string(i));
  for (std::size_t j = 0; j < merchants; ++j) mt.push_back("m" + std::to_string(j));
  std::vector<fl::GraphEdge> edges;
  for (std::uint32_t i = 0; i < cards; ++i) {
    for (std::uint32_t j = 0; j < merchants; ++j) {
      if (rng.bernoulli(p)) edges.push_back({i, j, 1 + rng.below(4), 0});
    }
  }
  return fl::BipartiteGraph(ct, mt, edges);
}

Outcome kcore() {
  fl::SplitMix64 rng(404);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const fl::BipartiteGraph g = random_graph(rng);
    mismatches += fl::core_decomposition(g) != oracle::brute_core_numbers(oracle::adjacency(g));
  }
  const fl::BipartiteGraph star({"hub"}, {"m1", "m2", "m3", "m4", "m5"},
                                {{0, 0, 1, 0}, {0, 1, 1, 0}, {0, 2, 1, 0}, {0, 3, 1, 0}, {0, 4, 1, 0}});
  const fl::BipartiteGraph k22({"a", "b"}, {"x", "y"},
                               {{0, 0, 1, 0}, {0, 1, 1, 0}, {1, 0, 1, 0}, {1, 1, 1, 0}});
  const auto sc = fl::core_decomposition(star), kc = fl::core_decomposition(k22);
  const bool star_ok = std::all_of(sc.begin(), sc.end(), [](auto c) { return c == 1; });
  const bool k22_ok = std::all_of(kc.begin(), kc.end(), [](auto c) { return c == 2; });
  char buf[160];
  std::snprintf(buf, sizeof buf, "1000 random graphs, %zu mismatches; K_{1,5} %s; K_{2,2} %s",
                mismatches, star_ok ? "all 1" : "WRONG", k22_ok ? "all 2" : "WRONG");
  return {mismatches == 0 && star_ok && k22_ok, buf};
}

Outcome triplets_and_conservation() {
  std::size_t cards = 0, violations = 0;
  const auto check_dataset = [&](const fl::Dataset& d) {
    const fl::CardIndex index = fl::build_card_index(d);
    const fl::DashboardIndex dash(d, index, 16);
    for (std::uint32_t c = 0; c < d.n_cards(); ++c) {
      std::vector<fl::Transaction> txns;
      std::vector<std::int64_t> ts;
      std::int64_t amount = 0;
      for (const std::size_t i : index.of(c)) {
        txns.push_back(d.transaction(i));
        ts.push_back(txns.back().timestamp);
        amount += txns.back().amount_cents;
      }
      ++cards;
      const std::size_t n = txns.size();
      violations += fl::iat_scatter(ts).size() != (n >= 2 ? n - 2 : 0);
      for (const int l : {10, 60}) {
        const fl::TemporalBins tb = fl::temporal_evolution(txns, dash, l);
        std::uint64_t count = 0;
        std::int64_t total = 0;
        for (const fl::TemporalBin& b : tb.bins) {
          count += b.txn_count;
          total += b.total_amount_cents;
        }
        violations += count != n || total != amount;
      }
    }
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed) check_dataset(oracle::random_dataset(seed));
  check_dataset(archetype_dataset().dataset);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu cards over 101 datasets, %zu violations", cards, violations);
  return {violations == 0, buf};
}

Outcome ranking_metrics() {
  // Exhaustive agreement on all lists up to length 8 over a 3-level score alphabet.
  const double levels[3] = {0.25, 0.5, 0.75};
  std::size_t lists = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    std::size_t codes = 1;
    for (std::size_t i = 0; i < n; ++i) codes *= 3;
    for (std::size_t sc = 0; sc < codes; ++sc) {
      std::vector<double> s(n);
      for (std::size_t i = 0, code = sc; i < n; ++i, code /= 3) s[i] = levels[code % 3];
      for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1u;
        ++lists;
        mismatches += fl::average_precision(s, y) != oracle::brute_ap(s, y);
        for (std::size_t k = 1; k <= n; ++k) {
          mismatches += fl::precision_at_k(s, y, k) != oracle::brute_prec_at_k(s, y, k);
        }
      }
    }
  }

  // Random scores at prevalence 0.002 over a criterion-3-sized list.
  const std::size_t n = 100000, positives = 200;
  std::vector<std::uint8_t> y(n, 0);
  for (std::size_t i = 0; i < positives; ++i) y[i * (n / positives)] = 1;
  fl::SplitMix64 rng(6);
  double sum = 0.0;
  std::vector<double> scores(n);
  for (int shuffle = 0; shuffle < 1000; ++shuffle) {
    for (double& v : scores) v = rng.uniform();
    sum += fl::average_precision(scores, y);
  }
  const double random_ap = sum / 1000.0;
  const bool random_ok = random_ap >= 0.001 && random_ap <= 0.003;

  // Isolation forest on the criterion-3 dataset.
  const auto labels = archetype_labels();
  const fl::FeatureMatrix fm =
      fl::FeatureMatrix::from_table(archetype_features(), fl::kDefaultScoringFeatures);
  const fl::Matrix data = fm.select(fl::kDefaultScoringFeatures);
  const auto model = fl::IsolationForestModel::fit(data, {100, 256, 0});
  const auto if_scores = model.score_all(data);
  const double prevalence =
      static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / labels.size();
  const double ap = fl::average_precision(if_scores, labels);
  const double p100 = fl::precision_at_k(if_scores, labels, 100);
  const bool forest_ok = ap >= 10 * prevalence && p100 >= 10 * prevalence;

  char buf[320];
  std::snprintf(buf, sizeof buf,
                "exhaustive: %zu lists, %zu mismatches; random AP %.5f (band 0.001..0.003); "
                "iForest AP %.4f, Prec@100 %.3f vs 10x prevalence %.5f",
                lists, mismatches, random_ap, ap, p100, 10 * prevalence);
  return {mismatches == 0 && random_ok && forest_ok, buf};
}

Outcome forward_selection() {
  const auto labels = archetype_labels();
  const std::vector<std::string> signal = fl::kDefaultScoringFeatures;
  int hits = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    fl::FeatureMatrix fm = fl::FeatureMatrix::from_table(archetype_features(), signal);
    std::vector<std::string> candidates = signal;
    fl::SplitMix64 rng(fl::derive_seed(seed, 77));
    for (int k = 0; k < 6; ++k) {
      std::vector<double> noise(fm.n_rows());
      for (double& v : noise) v = rng.uniform();
      const std::string name = "noise" + std::to_string(k);
      fm.add_column(name, std::move(noise));
      candidates.push_back(name);
    }
    fl::SelectionOptions options;
    options.forest.seed = seed;
    options.epsilon = -1.0;  // always take five picks
    const fl::SelectionResult r = fl::forward_select(fm, labels, candidates, 5, options);
    std::set<std::string> picked;
    std::string line;
    for (const fl::SelectionStep& s : r.steps) {
      picked.insert(s.feature);
      line += (line.empty() ? "" : "+") + s.feature;
    }
    const bool hit = picked.count("n_txns") && picked.count("n_distinct_iat");
    hits += hit;
    std::fprintf(stderr, "  seed %llu: %s (%s)\n", static_cast<unsigned long long>(seed),
                 line.c_str(), hit ? "hit" : "miss");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "n_txns and n_distinct_iat both picked in %d/10 seeds (need 9)",
                hits);
  return {hits >= 9, buf};
}

std::string replay_once(const fl::Dataset& d) {
  fl::Session s(d);
  const auto post = [&](const std::string& path, const fl::Json& body) {
    s.handle("POST", path, {}, body.dump());
  };
  const auto region = [](const char* x, const char* y, double cx, double cy, double r) {
    return fl::Json{{"x", x},
                    {"y", y},
                    {"ellipse", {{"center_x", cx}, {"center_y", cy}, {"semi_x", r}, {"semi_y", r}}}};
  };
  post("/regions", region("n_txns", "n_distinct_iat", 1.8, 0.4, 0.3));
  post("/regions", region("n_txns", "n_distinct_amounts", 1.8, 0.4, 0.3));
  post("/regions", region("n_txns", "median_amount_cents", 1.8, 2.2, 0.4));
  post("/regions/r1/label", {{"label", "machine-gun"}});
  post("/regions/r3/label", {{"label", "penny"}});
  post("/regions/r2/label", {{"label", "double"}});
  post("/regions/r1/label", {{"label", "machine-gun-2"}});
  return s.handle("GET", "/classes", {}, "").body;
}

Outcome replay() {
  fl::SynthConfig c;
  c.n_honest_cards = 2000;
  c.archetypes = {fl::ArchetypeSpec::double_machine_gun(5), fl::ArchetypeSpec::penny_hunter(5),
                  fl::ArchetypeSpec::bursty_poster(5)};
  c.seed = 8;
  const fl::Dataset d = fl::generate(c).dataset;
  const std::string a = replay_once(d), b = replay_once(d);
  char buf[128];
  std::snprintf(buf, sizeof buf, "two replays, %zu and %zu bytes, %s", a.size(), b.size(),
                a == b ? "identical" : "DIFFERENT");
  return {a == b && !a.empty(), buf};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-8"};
  std::vector<int> only;
  std::size_t reps = 3;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--bench-reps", reps, "Repetitions per bench size");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"feature oracle equivalence", feature_oracle},
      {"linear preprocessing time", [reps] { return linearity(reps); }},
      {"archetype detection", archetype_detection},
      {"k-core correctness", kcore},
      {"triplet law and conservation", triplets_and_conservation},
      {"ranking metrics", ranking_metrics},
      {"forward selection sanity", forward_selection},
      {"replay determinism", replay},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    const Outcome o = criteria[i].second();
    all &= o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
