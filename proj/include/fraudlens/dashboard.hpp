#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlens/features.hpp"
#include "fraudlens/graph.hpp"
#include "fraudlens/heatmap.hpp"
#include "fraudlens/ingest.hpp"

namespace fraudlens {

/// Inter-arrival pair for a triplet of consecutive txns.
struct IatPoint {
  std::int64_t dt_before_s = 0;
  std::int64_t dt_after_s = 0;

  bool operator==(const IatPoint&) const = default;
};

/// Point m is (t[m+1] - t[m], t[m+2] - t[m+1]); fewer than 3 timestamps give
/// no points. Timestamps must be chronological.
std::vector<IatPoint> iat_scatter(std::span<const std::int64_t> timestamps);

/// Gray background for the scatter: IAT points of every card except
/// `exclude`. Edges span the IAT range of the whole dataset so the frame is
/// the same for every target.
HeatmapGrid iat_background(const Dataset& d, std::string_view exclude,
                           std::size_t n_bins = 64);

struct SpreadsheetRow {
  std::string merchant;
  std::int64_t amount_cents = 0;
  std::int64_t timestamp = 0;
  std::optional<std::int64_t> iat_s;  // empty on the first row
  std::vector<std::uint32_t> suspicion_counts;
  FraudLabel fraud_label = FraudLabel::Unknown;
  bool repeated_merchant = false;
  bool repeated_amount = false;
  bool repeated_iat = false;
  bool nonzero_suspicion = false;
  bool confirmed_fraud = false;
};

/// Rows for one card's chronological txns; a repeated_* flag is set when the
/// value occurs at least twice among the card's txns.
std::vector<SpreadsheetRow> spreadsheet_rows(std::span<const Transaction> txns);

struct TemporalBin {
  std::int64_t bin_start = 0;
  std::uint64_t txn_count = 0;
  std::int64_t total_amount_cents = 0;
};

struct BackgroundBin {
  std::int64_t bin_start = 0;
  double norm_count = 0.0;
  double norm_amount = 0.0;
};

/// Bins tile the dataset window starting at midnight (UTC) of its first day.
/// The background is everyone else's activity scaled so that its peak
/// matches the target's peak (counts and amounts separately).
struct TemporalBins {
  int bin_length_min = 10;
  std::vector<TemporalBin> bins;
  std::vector<BackgroundBin> background;
  double count_scale = 0.0;
  double amount_scale = 0.0;
};

/// `target_txns` are the target card's txns within `d`. Throws
/// Error{InvalidBinLength} unless bin_length_min is 10 or 60.
TemporalBins temporal_evolution(std::span<const Transaction> target_txns,
                                const Dataset& d, int bin_length_min);

/// Whole-dataset aggregates computed once so that each dashboard only reads
/// the target's txns and its two-step neighborhood.
class DashboardIndex {
 public:
  DashboardIndex(const Dataset& d, const CardIndex& cards,
                 std::size_t iat_bins = 64);

  const HeatmapGrid& iat_grid() const noexcept { return iat_grid_; }
  std::int64_t origin() const noexcept { return origin_; }

  struct Totals {
    std::vector<std::uint64_t> counts;
    std::vector<std::int64_t> amounts;
  };
  const Totals& totals(int bin_length_min) const;

 private:
  HeatmapGrid iat_grid_;
  std::int64_t origin_ = 0;
  Totals fine_;
  Totals coarse_;
};

/// Same bins from the precomputed totals; costs O(bins + target txns).
TemporalBins temporal_evolution(std::span<const Transaction> target_txns,
                                const DashboardIndex& index, int bin_length_min);

struct DashboardPayload {
  std::string card_id;
  CardFeatures features;
  EgonetView egonet;
  std::vector<IatPoint> iat_points;
  HeatmapGrid iat_background;
  std::vector<SpreadsheetRow> spreadsheet;
  TemporalBins temporal_fine;
  TemporalBins temporal_coarse;
  CardClass assigned_class = CardClass::Unlabeled;
};

/// Counts the records read while assembling one dashboard.
struct AccessCounter {
  std::size_t txns_read = 0;
  std::size_t egonet_nodes = 0;
  std::size_t egonet_edges = 0;
};

/// Throws Error{UnknownCard} when the target is not in the dataset.
DashboardPayload assemble_dashboard(const Dataset& d, const CardIndex& cards,
                                    const FeatureTable& features,
                                    const BipartiteGraph& graph,
                                    const std::map<std::string, CardClass>& classes,
                                    const DashboardIndex& index,
                                    std::string_view target,
                                    AccessCounter* counter = nullptr);

}  // namespace fraudlens
