#include "fraudlens/bench.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>
#include <sstream>

#include "fraudlens/anomaly.hpp"
#include "fraudlens/features.hpp"
#include "fraudlens/graph.hpp"
#include "fraudlens/heatmap.hpp"
#include "fraudlens/ingest.hpp"
#include "fraudlens/random.hpp"

namespace fraudlens {

namespace {

// Returns a value derived from every stage so nothing is optimized away.
std::size_t run_pipeline(const std::string& csv) {
  std::istringstream in(csv);
  const Dataset d = parse_transactions(in);
  const FeatureTable table = extract_features(d);
  std::size_t sink = 0;
  const auto& names = kDefaultScoringFeatures;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      sink += build_heatmap(table, names[i], names[j]).total_cards;
    }
  }
  sink += detect(table).size();
  sink += build_graph(d).n_edges();
  return sink;
}

}  // namespace

std::vector<BenchRow> run_bench(const SynthConfig& base, std::span<const std::size_t> sizes,
                                std::uint64_t seed, std::size_t reps) {
  std::vector<BenchRow> rows;
  if (sizes.empty()) return rows;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    // One size at a time keeps a single dataset in memory.
    std::string csv;
    std::size_t n = 0;
    {
      const std::size_t size = sizes[i];
      std::vector<SynthResult> one =
          scale_series(base, std::span<const std::size_t>(&size, 1), derive_seed(seed, i));
      std::ostringstream out;
      write_dataset(one.front().dataset, out);
      n = one.front().dataset.size();
      csv = std::move(out).str();
    }

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      volatile std::size_t sink = run_pipeline(csv);
      (void)sink;
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    rows.push_back({n, best, n == 0 ? 0.0 : best * 1e6 / static_cast<double>(n)});
  }
  return rows;
}

void write_bench_csv(std::span<const BenchRow> rows, std::ostream& out) {
  out << "n_txns,wall_seconds,per_txn_us\n";
  for (const BenchRow& r : rows) {
    out << r.n_txns << ',' << r.wall_seconds << ',' << r.per_txn_us << '\n';
  }
}

}  // namespace fraudlens
