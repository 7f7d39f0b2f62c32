#include "fraudlens/dashboard.hpp"

#include <algorithm>
#include <unordered_map>

#include "fraudlens/calendar.hpp"
#include "fraudlens/error.hpp"

namespace fraudlens {

std::vector<IatPoint> iat_scatter(std::span<const std::int64_t> timestamps) {
  std::vector<IatPoint> points;
  if (timestamps.size() < 3) return points;
  points.reserve(timestamps.size() - 2);
  for (std::size_t m = 0; m + 2 < timestamps.size(); ++m) {
    points.push_back({timestamps[m + 1] - timestamps[m],
                      timestamps[m + 2] - timestamps[m + 1]});
  }
  return points;
}

namespace {

constexpr const char* kDtBefore = "dt_before_s";
constexpr const char* kDtAfter = "dt_after_s";

// Calls fn(dt_before, dt_after) for every triplet of one card.
template <typename Fn>
void for_each_triplet(const Dataset& d, std::span<const std::size_t> txns, Fn&& fn) {
  for (std::size_t m = 0; m + 2 < txns.size(); ++m) {
    const std::int64_t t0 = d.record(txns[m]).timestamp;
    const std::int64_t t1 = d.record(txns[m + 1]).timestamp;
    const std::int64_t t2 = d.record(txns[m + 2]).timestamp;
    fn(t1 - t0, t2 - t1);
  }
}

HeatmapGrid empty_iat_grid(const Dataset& d, const CardIndex& cards, std::size_t n_bins) {
  std::int64_t max_dt = 0;
  for (std::uint32_t c = 0; c < d.n_cards(); ++c) {
    for_each_triplet(d, cards.of(c), [&](std::int64_t before, std::int64_t after) {
      max_dt = std::max({max_dt, before, after});
    });
  }
  const double u = axis_transform(static_cast<double>(max_dt));
  return make_grid(kDtBefore, kDtAfter, n_bins, u, u);
}

void check_bin_length(int bin_length_min) {
  if (bin_length_min != 10 && bin_length_min != 60) {
    throw Error(ErrorKind::InvalidBinLength,
                "bin length must be 10 or 60 minutes, got " +
                    std::to_string(bin_length_min));
  }
}

std::int64_t window_origin(const Dataset& d) {
  return floor_div(d.time_window().start, kSecondsPerDay) * kSecondsPerDay;
}

std::size_t bin_count(const Dataset& d, std::int64_t origin, int bin_length_min) {
  if (d.empty()) return 0;
  return static_cast<std::size_t>(
      floor_div(d.time_window().end - origin, bin_length_min * 60LL) + 1);
}

DashboardIndex::Totals dataset_totals(const Dataset& d, std::int64_t origin,
                                      int bin_length_min) {
  DashboardIndex::Totals t;
  const std::size_t n = bin_count(d, origin, bin_length_min);
  t.counts.assign(n, 0);
  t.amounts.assign(n, 0);
  for (const TxnRecord& r : d.records()) {
    const auto b = static_cast<std::size_t>(
        floor_div(r.timestamp - origin, bin_length_min * 60LL));
    ++t.counts[b];
    t.amounts[b] += r.amount_cents;
  }
  return t;
}

// Splits dataset totals into the target's bins and the scaled remainder.
TemporalBins split_bins(std::span<const Transaction> target,
                        const DashboardIndex::Totals& totals, std::int64_t origin,
                        int bin_length_min) {
  const std::int64_t width = bin_length_min * 60LL;
  TemporalBins out;
  out.bin_length_min = bin_length_min;
  const std::size_t n = totals.counts.size();
  out.bins.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    out.bins[b].bin_start = origin + static_cast<std::int64_t>(b) * width;
  }
  for (const Transaction& t : target) {
    const std::int64_t b = floor_div(t.timestamp - origin, width);
    if (b < 0 || static_cast<std::size_t>(b) >= n) {
      throw Error(ErrorKind::InvalidParams, "target txn outside the dataset window");
    }
    ++out.bins[b].txn_count;
    out.bins[b].total_amount_cents += t.amount_cents;
  }

  std::uint64_t target_max_count = 0, other_max_count = 0;
  std::int64_t target_max_amount = 0, other_max_amount = 0;
  for (std::size_t b = 0; b < n; ++b) {
    target_max_count = std::max(target_max_count, out.bins[b].txn_count);
    target_max_amount = std::max(target_max_amount, out.bins[b].total_amount_cents);
    other_max_count = std::max(other_max_count, totals.counts[b] - out.bins[b].txn_count);
    other_max_amount =
        std::max(other_max_amount, totals.amounts[b] - out.bins[b].total_amount_cents);
  }
  out.count_scale = other_max_count > 0 ? static_cast<double>(target_max_count) /
                                              static_cast<double>(other_max_count)
                                        : 0.0;
  out.amount_scale = other_max_amount > 0 ? static_cast<double>(target_max_amount) /
                                                static_cast<double>(other_max_amount)
                                          : 0.0;
  out.background.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    out.background[b] = {
        out.bins[b].bin_start,
        static_cast<double>(totals.counts[b] - out.bins[b].txn_count) * out.count_scale,
        static_cast<double>(totals.amounts[b] - out.bins[b].total_amount_cents) *
            out.amount_scale};
  }
  return out;
}

}  // namespace

HeatmapGrid iat_background(const Dataset& d, std::string_view exclude, std::size_t n_bins) {
  const CardIndex cards = build_card_index(d);
  HeatmapGrid grid = empty_iat_grid(d, cards, n_bins);
  const std::int64_t skip = d.find_card(exclude);
  for (std::uint32_t c = 0; c < d.n_cards(); ++c) {
    if (static_cast<std::int64_t>(c) == skip) continue;
    for_each_triplet(d, cards.of(c), [&](std::int64_t before, std::int64_t after) {
      accumulate(grid, static_cast<double>(before), static_cast<double>(after));
    });
  }
  return grid;
}

std::vector<SpreadsheetRow> spreadsheet_rows(std::span<const Transaction> txns) {
  std::unordered_map<std::string_view, int> merchant_seen;
  std::unordered_map<std::int64_t, int> amount_seen, iat_seen;
  for (std::size_t i = 0; i < txns.size(); ++i) {
    ++merchant_seen[txns[i].merchant_id];
    ++amount_seen[txns[i].amount_cents];
    if (i > 0) ++iat_seen[txns[i].timestamp - txns[i - 1].timestamp];
  }
  std::vector<SpreadsheetRow> rows;
  rows.reserve(txns.size());
  for (std::size_t i = 0; i < txns.size(); ++i) {
    const Transaction& t = txns[i];
    SpreadsheetRow row;
    row.merchant = t.merchant_id;
    row.amount_cents = t.amount_cents;
    row.timestamp = t.timestamp;
    if (i > 0) row.iat_s = t.timestamp - txns[i - 1].timestamp;
    row.suspicion_counts = t.suspicion_counts;
    row.fraud_label = t.fraud_label;
    row.repeated_merchant = merchant_seen[t.merchant_id] >= 2;
    row.repeated_amount = amount_seen[t.amount_cents] >= 2;
    row.repeated_iat = row.iat_s && iat_seen[*row.iat_s] >= 2;
    row.nonzero_suspicion =
        std::any_of(t.suspicion_counts.begin(), t.suspicion_counts.end(),
                    [](std::uint32_t c) { return c != 0; });
    row.confirmed_fraud = t.fraud_label == FraudLabel::Fraud;
    rows.push_back(std::move(row));
  }
  return rows;
}

TemporalBins temporal_evolution(std::span<const Transaction> target_txns,
                                const Dataset& d, int bin_length_min) {
  check_bin_length(bin_length_min);
  const std::int64_t origin = window_origin(d);
  return split_bins(target_txns, dataset_totals(d, origin, bin_length_min), origin,
                    bin_length_min);
}

TemporalBins temporal_evolution(std::span<const Transaction> target_txns,
                                const DashboardIndex& index, int bin_length_min) {
  return split_bins(target_txns, index.totals(bin_length_min), index.origin(), bin_length_min);
}

DashboardIndex::DashboardIndex(const Dataset& d, const CardIndex& cards,
                               std::size_t iat_bins)
    : iat_grid_(empty_iat_grid(d, cards, iat_bins)), origin_(window_origin(d)) {
  for (std::uint32_t c = 0; c < d.n_cards(); ++c) {
    for_each_triplet(d, cards.of(c), [&](std::int64_t before, std::int64_t after) {
      accumulate(iat_grid_, static_cast<double>(before), static_cast<double>(after));
    });
  }
  fine_ = dataset_totals(d, origin_, 10);
  coarse_ = dataset_totals(d, origin_, 60);
}

const DashboardIndex::Totals& DashboardIndex::totals(int bin_length_min) const {
  check_bin_length(bin_length_min);
  return bin_length_min == 10 ? fine_ : coarse_;
}

DashboardPayload assemble_dashboard(const Dataset& d, const CardIndex& cards,
                                    const FeatureTable& features,
                                    const BipartiteGraph& graph,
                                    const std::map<std::string, CardClass>& classes,
                                    const DashboardIndex& index,
                                    std::string_view target,
                                    AccessCounter* counter) {
  const std::int64_t card = d.find_card(target);
  const auto row = features.find(target);
  if (card < 0 || !row) {
    throw Error(ErrorKind::UnknownCard, "'" + std::string(target) + "'");
  }
  const auto txn_ids = cards.of(static_cast<std::uint32_t>(card));
  std::vector<Transaction> txns;
  std::vector<std::int64_t> timestamps;
  txns.reserve(txn_ids.size());
  for (const std::size_t i : txn_ids) {
    txns.push_back(d.transaction(i));
    timestamps.push_back(txns.back().timestamp);
  }

  DashboardPayload p;
  p.card_id = std::string(target);
  p.features = features[*row];
  p.egonet = egonet_view(graph, target);
  p.iat_points = iat_scatter(timestamps);
  p.iat_background = index.iat_grid();
  for (const IatPoint& pt : p.iat_points) {
    accumulate(p.iat_background, static_cast<double>(pt.dt_before_s),
               static_cast<double>(pt.dt_after_s), -1);
  }
  p.spreadsheet = spreadsheet_rows(txns);
  p.temporal_fine = temporal_evolution(txns, index, 10);
  p.temporal_coarse = temporal_evolution(txns, index, 60);
  if (const auto it = classes.find(p.card_id); it != classes.end()) {
    p.assigned_class = it->second;
  }
  if (counter != nullptr) {
    counter->txns_read += txns.size();
    counter->egonet_nodes += p.egonet.egonet_nodes;
    counter->egonet_edges += p.egonet.egonet_edges;
  }
  return p;
}

}  // namespace fraudlens
