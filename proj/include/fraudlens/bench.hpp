#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fraudlens/synth.hpp"

namespace fraudlens {

struct BenchRow {
  std::size_t n_txns = 0;
  double wall_seconds = 0.0;
  double per_txn_us = 0.0;
};

/// For each size, generates a dataset and serializes it to CSV (untimed),
/// then times parse, feature extraction, the six default heatmaps, flagging
/// and graph construction. The reported time is the minimum over `reps`.
std::vector<BenchRow> run_bench(const SynthConfig& base, std::span<const std::size_t> sizes,
                                std::uint64_t seed, std::size_t reps = 1);

void write_bench_csv(std::span<const BenchRow> rows, std::ostream& out);

}  // namespace fraudlens
