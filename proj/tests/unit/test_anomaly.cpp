#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "../oracles.hpp"
#include "fraudlens/anomaly.hpp"
#include "fraudlens/error.hpp"

using namespace fraudlens;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoFailure;
}

// c(n) from a long-double harmonic sum.
double brute_c(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  long double h = 0.0L;
  for (std::size_t i = 1; i < n; ++i) h += 1.0L / static_cast<long double>(i);
  return static_cast<double>(2.0L * h - 2.0L * static_cast<long double>(n - 1) /
                                            static_cast<long double>(n));
}

// Walks the stored nodes directly instead of calling IsolationTree.
double brute_score(const IsolationForestModel& m, std::span<const double> row) {
  long double total = 0.0L;
  for (const IsolationTree& t : m.trees()) {
    std::uint32_t id = 0;
    while (t.nodes[id].feature >= 0) {
      const IsolationNode& n = t.nodes[id];
      id = row[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    }
    total += static_cast<long double>(t.nodes[id].depth) + brute_c(t.nodes[id].size);
  }
  const double mean = static_cast<double>(total / static_cast<long double>(m.trees().size()));
  return std::pow(2.0, -mean / brute_c(m.subsample_size()));
}

Matrix blob_with_outlier(std::uint64_t seed, std::size_t n) {
  SplitMix64 rng(seed);
  Matrix m(n + 1, 2);
  for (std::size_t i = 0; i < n; ++i) {
    m.at(i, 0) = rng.normal();
    m.at(i, 1) = rng.normal();
  }
  m.at(n, 0) = 12.0;
  m.at(n, 1) = -12.0;
  return m;
}

std::size_t ceil_log2(std::size_t n) {
  std::size_t d = 0;
  while ((std::size_t{1} << d) < n) ++d;
  return d;
}

}  // namespace

TEST_CASE("average path length") {
  CHECK(average_path_length(0) == 0.0);
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == 1.0);
  for (std::size_t n = 3; n < 5000; n += 7) {
    CHECK(average_path_length(n) == doctest::Approx(brute_c(n)).epsilon(1e-14));
  }
  CHECK(average_path_length(256) == 10.248689925634562);
}

TEST_CASE("identical rows give single-node trees") {
  Matrix m(50, 3);
  for (double& v : m.values) v = 4.0;
  const auto model = IsolationForestModel::fit(m, {20, 16, 1});
  for (const IsolationTree& t : model.trees()) {
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].size == 16);
  }
}

TEST_CASE("fit is deterministic per seed") {
  const Matrix m = blob_with_outlier(1, 300);
  const auto a = IsolationForestModel::fit(m, {50, 64, 7});
  const auto b = IsolationForestModel::fit(m, {50, 64, 7});
  const auto c = IsolationForestModel::fit(m, {50, 64, 8});
  CHECK(a.score_all(m) == b.score_all(m));
  CHECK(a.score_all(m) != c.score_all(m));
}

TEST_CASE("blob plus outlier") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = blob_with_outlier(seed, 500);
    const auto model = IsolationForestModel::fit(m, {100, 256, seed});
    const auto scores = model.score_all(m);
    for (std::size_t i = 0; i < m.n_rows; ++i) {
      CHECK(scores[i] == doctest::Approx(brute_score(model, m.row(i))).epsilon(1e-12));
      CHECK(scores[i] > 0.0);
      CHECK(scores[i] < 1.0);
    }
    const std::size_t top =
        static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    CHECK(top == 500);
    std::vector<double> blob(scores.begin(), scores.end() - 1);
    std::nth_element(blob.begin(), blob.begin() + blob.size() / 2, blob.end());
    CHECK(scores[500] > 0.6);
    CHECK(0.6 > blob[blob.size() / 2]);
  }
}

TEST_CASE("tree structure invariants") {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t rows = 20 + rng.below(400), cols = 1 + rng.below(5);
    Matrix m(rows, cols);
    for (double& v : m.values) v = static_cast<double>(rng.below(30));
    const std::size_t psi = 2 + rng.below(rows - 1);
    const auto model = IsolationForestModel::fit(m, {25, psi, rng.next()});
    CHECK(model.max_depth() == ceil_log2(psi));
    for (const IsolationTree& t : model.trees()) {
      CHECK(t.depth() <= model.max_depth());
      std::uint64_t mass = 0;
      for (const IsolationNode& n : t.nodes) {
        if (n.feature < 0) {
          mass += n.size;
          continue;
        }
        const auto col = static_cast<std::size_t>(n.feature);
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t r = 0; r < rows; ++r) {
          lo = std::min(lo, m.at(r, col));
          hi = std::max(hi, m.at(r, col));
        }
        CHECK(n.split > lo);
        CHECK(n.split <= hi);
        CHECK(t.nodes[n.left].depth == n.depth + 1);
        CHECK(t.nodes[n.right].depth == n.depth + 1);
      }
      CHECK(mass == psi);
    }
  }
}

TEST_CASE("fit and score errors") {
  const Matrix m = blob_with_outlier(0, 10);
  CHECK(kind_of([] { IsolationForestModel::fit(Matrix{}, {}); }) == ErrorKind::EmptyMatrix);
  CHECK(kind_of([&] { IsolationForestModel::fit(m, {0, 4, 0}); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([&] { IsolationForestModel::fit(m, {5, 1, 0}); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([&] { IsolationForestModel::fit(m, {5, 12, 0}); }) == ErrorKind::InvalidParams);
  const auto model = IsolationForestModel::fit(m, {5, 8, 0});
  const std::vector<double> short_row = {1.0};
  CHECK(kind_of([&] { model.score(short_row); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("scores do not depend on row order at scoring time") {
  const Matrix m = blob_with_outlier(3, 200);
  const auto model = IsolationForestModel::fit(m, {40, 64, 3});
  const auto scores = model.score_all(m);
  std::vector<std::size_t> perm(m.n_rows);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(4);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Matrix shuffled(m.n_rows, m.n_cols);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < m.n_cols; ++c) shuffled.at(i, c) = m.at(perm[i], c);
  }
  const auto reordered = model.score_all(shuffled);
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(reordered[i] == scores[perm[i]]);
}

TEST_CASE("ranking metric examples") {
  const std::vector<double> s = {0.9, 0.8, 0.1, 0.05};
  const std::vector<std::uint8_t> perfect = {1, 1, 0, 0};
  CHECK(average_precision(s, perfect) == 1.0);
  CHECK(precision_at_k(s, perfect, 2) == 1.0);
  CHECK(precision_at_k(s, perfect, 4) == 0.5);

  const std::vector<double> two = {0.9, 0.1};
  const std::vector<std::uint8_t> second = {0, 1};
  CHECK(average_precision(two, second) == 0.5);

  const std::vector<double> tied = {0.5, 0.5, 0.5};
  const std::vector<std::uint8_t> last = {0, 0, 1};
  CHECK(average_precision(tied, last) == doctest::Approx(1.0 / 3.0));

  const std::vector<std::uint8_t> none = {0, 0, 0, 0};
  const std::vector<std::uint8_t> short_labels = {1, 0};
  CHECK(kind_of([&] { average_precision(s, none); }) == ErrorKind::NoPositives);
  CHECK(kind_of([&] { average_precision(s, short_labels); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([&] { precision_at_k(s, perfect, 5); }) == ErrorKind::KTooLarge);
  CHECK(kind_of([&] { precision_at_k(s, perfect, 0); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([&] { precision_at_k(s, short_labels, 1); }) == ErrorKind::LengthMismatch);

  const std::vector<std::size_t> ks = {1, 3, 10};
  const RankingMetrics rm = evaluate_ranking(s, perfect, ks);
  CHECK(rm.average_precision == 1.0);
  CHECK(rm.precision_at_k.size() == 2);
  CHECK(rm.precision_at_k.at(3) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("AP and Prec@k match the exhaustive oracle up to length 8") {
  const double levels[3] = {0.25, 0.5, 0.75};
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    std::size_t score_codes = 1;
    for (std::size_t i = 0; i < n; ++i) score_codes *= 3;
    for (std::size_t sc = 0; sc < score_codes; ++sc) {
      std::vector<double> scores(n);
      for (std::size_t i = 0, code = sc; i < n; ++i, code /= 3) scores[i] = levels[code % 3];
      for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1u;
        CHECK(average_precision(scores, y) == oracle::brute_ap(scores, y));
        for (std::size_t k = 1; k <= n; ++k) {
          CHECK(precision_at_k(scores, y, k) == oracle::brute_prec_at_k(scores, y, k));
        }
        ++cases;
      }
    }
  }
  CHECK(cases > 1000000);
}

TEST_CASE("AP is invariant under strictly increasing score transforms") {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<double> s(n), t(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(40));
      t[i] = std::exp(s[i] / 7.0) * 3.0 - 1.0;
      y[i] = rng.bernoulli(0.2);
    }
    y[0] = 1;
    CHECK(average_precision(s, y) == average_precision(t, y));
    const std::size_t k = 1 + rng.below(n);
    CHECK(precision_at_k(s, y, k) == precision_at_k(t, y, k));
    const double ap = average_precision(s, y);
    CHECK(ap > 0.0);
    CHECK(ap <= 1.0);
  }
}

TEST_CASE("random scores give AP near prevalence") {
  const std::size_t n = 5000, positives = 10;
  SplitMix64 rng(13);
  std::vector<std::uint8_t> y(n, 0);
  for (std::size_t i = 0; i < positives; ++i) y[i] = 1;
  double sum = 0.0;
  const int shuffles = 300;
  for (int s = 0; s < shuffles; ++s) {
    std::vector<double> scores(n);
    for (double& v : scores) v = rng.uniform();
    sum += average_precision(scores, y);
  }
  const double mean = sum / shuffles;
  CHECK(mean > 0.001);
  CHECK(mean < 0.004);
}

TEST_CASE("feature matrix") {
  FeatureMatrix fm;
  fm.add_column("a", {1, 2, 3});
  fm.add_column("b", {4, 5, 6});
  CHECK(fm.n_rows() == 3);
  CHECK(fm.has("a"));
  CHECK_FALSE(fm.has("z"));
  const std::vector<std::string> order = {"b", "a"};
  const Matrix m = fm.select(order);
  CHECK(m.at(0, 0) == 4.0);
  CHECK(m.at(2, 1) == 3.0);
  CHECK(kind_of([&] { fm.add_column("c", {1.0}); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([&] { fm.add_column("a", {1, 2, 3}); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([&] { fm.column("zz"); }) == ErrorKind::UnknownFeature);

  const FeatureTable t = extract_features(oracle::random_dataset(3));
  const FeatureMatrix from = FeatureMatrix::from_table(t, kDefaultScoringFeatures);
  CHECK(from.column("n_txns") == t.column("n_txns"));
}

namespace {

// 600 rows: `signal` lifts 6 positives far from the crowd, `noise*` are uniform.
struct SelectionFixture {
  FeatureMatrix fm;
  std::vector<std::uint8_t> labels;

  explicit SelectionFixture(std::uint64_t seed, std::size_t n_noise) {
    SplitMix64 rng(seed);
    const std::size_t n = 600;
    labels.assign(n, 0);
    std::vector<double> signal(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i % 100 == 0;
      signal[i] = labels[i] ? 1000.0 + rng.uniform() : rng.uniform() * 10.0;
    }
    fm.add_column("signal", signal);
    for (std::size_t k = 0; k < n_noise; ++k) {
      std::vector<double> noise(n);
      for (double& v : noise) v = rng.uniform();
      fm.add_column("noise" + std::to_string(k), noise);
    }
  }
};

SelectionOptions quick_options(std::uint64_t seed) {
  SelectionOptions o;
  o.forest.n_trees = 30;
  o.forest.subsample_size = 128;
  o.forest.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("forward selection examples") {
  const SelectionFixture f(1, 3);
  const std::vector<std::string> single = {"noise1"};
  const SelectionResult one = forward_select(f.fm, f.labels, single, 1, quick_options(0));
  REQUIRE(one.steps.size() == 1);
  CHECK(one.steps[0].feature == "noise1");
  CHECK_FALSE(one.rejected.has_value());

  const std::vector<std::string> all = {"noise0", "noise1", "noise2", "signal"};
  const SelectionResult r = forward_select(f.fm, f.labels, all, 4, quick_options(0));
  REQUIRE_FALSE(r.steps.empty());
  CHECK(r.steps[0].feature == "signal");
  CHECK(r.steps[0].average_precision == 1.0);
  CHECK(r.steps.size() == 1);
  REQUIRE(r.rejected.has_value());
  CHECK(r.rejected->average_precision - r.steps[0].average_precision <= 0.001);

  CHECK(kind_of([&] { forward_select(f.fm, f.labels, all, 5, quick_options(0)); }) ==
        ErrorKind::InvalidParams);
  const std::vector<std::uint8_t> none(600, 0);
  CHECK(kind_of([&] { forward_select(f.fm, none, all, 2, quick_options(0)); }) ==
        ErrorKind::NoPositives);
  const std::vector<std::string> ghost = {"ghost"};
  CHECK(kind_of([&] { forward_select(f.fm, f.labels, ghost, 1, quick_options(0)); }) ==
        ErrorKind::UnknownFeature);
}

TEST_CASE("a duplicated column is never chosen after its twin") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SelectionFixture f(seed, 1);
    f.fm.add_column("noise0_copy", f.fm.column("noise0"));
    const std::vector<std::string> twins = {"noise0_copy", "noise0"};
    const SelectionResult r = forward_select(f.fm, f.labels, twins, 2, quick_options(seed));
    REQUIRE(r.steps.size() == 1);
    CHECK(r.steps[0].feature == "noise0");
    REQUIRE(r.rejected.has_value());
    CHECK(r.rejected->feature == "noise0_copy");
    CHECK(r.rejected->average_precision == r.steps[0].average_precision);
  }
}

TEST_CASE("each step is the greedy argmax of cross-validated AP") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SplitMix64 rng(seed + 50);
    const std::size_t n = 300;
    std::vector<std::uint8_t> labels(n);
    FeatureMatrix fm;
    std::vector<std::vector<double>> cols(4, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.bernoulli(0.05);
      for (std::size_t c = 0; c < 4; ++c) {
        cols[c][i] = rng.normal() + (labels[i] ? 1.5 * static_cast<double>(c) : 0.0);
      }
    }
    labels[0] = 1;
    const std::vector<std::string> names = {"f0", "f1", "f2", "f3"};
    for (std::size_t c = 0; c < 4; ++c) fm.add_column(names[c], cols[c]);
    SelectionOptions o = quick_options(seed);
    o.epsilon = -1.0;
    const SelectionResult r = forward_select(fm, labels, names, 4, o);
    REQUIRE(r.steps.size() == 4);
    std::vector<std::string> chosen;
    std::vector<std::string> remaining = names;
    for (const SelectionStep& step : r.steps) {
      double best = -1.0;
      std::string best_name;
      for (const std::string& c : remaining) {
        std::vector<std::string> trial = chosen;
        trial.push_back(c);
        const double ap = cross_validated_ap(fm, labels, trial, o);
        if (ap > best) {
          best = ap;
          best_name = c;
        }
      }
      CHECK(step.feature == best_name);
      CHECK(step.average_precision == best);
      chosen.push_back(best_name);
      remaining.erase(std::find(remaining.begin(), remaining.end(), best_name));
    }
  }
}

TEST_CASE("binary label reader") {
  std::istringstream in(
      "card_id,label\na,fraud\nb,honest\nc,1\nd,0\ne,double_machine_gun\nf,penny_hunter\n"
      "g,bursty_poster\nh,unlabeled\ni,\n");
  const auto labels = read_binary_labels(in);
  CHECK(labels.at("a") == 1);
  CHECK(labels.at("b") == 0);
  CHECK(labels.at("c") == 1);
  CHECK(labels.at("d") == 0);
  CHECK(labels.at("e") == 1);
  CHECK(labels.at("f") == 1);
  CHECK(labels.at("g") == 1);
  CHECK(labels.at("h") == 0);
  CHECK(labels.at("i") == 0);
  std::istringstream bad("card_id,label\na,maybe\n");
  CHECK(kind_of([&] { read_binary_labels(bad); }) == ErrorKind::MalformedRow);

  const FeatureTable t({CardFeatures{.card_id = "a"}, CardFeatures{.card_id = "zz"}});
  CHECK(align_labels(t, labels) == std::vector<std::uint8_t>{1, 0});
}
