#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fraudlens/ingest.hpp"

namespace fraudlens {

/// Per-card lockstep signals. Inter-arrival times are whole seconds between
/// consecutive txns in timestamp order. Medians are lower medians; variances
/// are population variances, correctly rounded from exact integer sums.
struct CardFeatures {
  std::string card_id;
  std::int64_t n_txns = 0;
  std::int64_t n_distinct_iat = 0;
  std::int64_t n_distinct_amounts = 0;
  std::int64_t median_amount_cents = 0;
  std::int64_t median_iat_s = 0;
  double variance_iat_s2 = 0.0;
  double variance_amount = 0.0;
  std::int64_t n_merchants = 0;
  double fraction_night = 0.0;  // share of txns at [22:00, 06:00) UTC

  bool operator==(const CardFeatures&) const = default;
};

inline constexpr std::array<std::string_view, 9> kFeatureNames = {
    "n_txns",          "n_distinct_iat",  "n_distinct_amounts",
    "median_amount_cents", "median_iat_s", "variance_iat_s2",
    "variance_amount", "n_merchants",     "fraction_night"};

bool is_feature(std::string_view name);

/// Value of a named feature as a double. Throws Error{UnknownFeature}.
double feature_value(const CardFeatures& f, std::string_view name);

/// One row per distinct card, ordered by card_id.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<CardFeatures> rows);

  const std::vector<CardFeatures>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const CardFeatures& operator[](std::size_t i) const { return rows_[i]; }

  std::optional<std::size_t> find(std::string_view card_id) const;
  std::vector<double> column(std::string_view name) const;

  bool operator==(const FeatureTable& other) const { return rows_ == other.rows_; }

 private:
  std::vector<CardFeatures> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Txn indices grouped by card (interned card index), each group in
/// chronological order with ties kept in ingestion order.
struct CardIndex {
  std::vector<std::size_t> offsets;  // n_cards + 1 entries
  std::vector<std::size_t> txns;

  std::span<const std::size_t> of(std::uint32_t card) const {
    return std::span<const std::size_t>(txns).subspan(
        offsets[card], offsets[card + 1] - offsets[card]);
  }
};

/// Counting sort by card, then a timestamp sort inside each group.
CardIndex build_card_index(const Dataset& d);

FeatureTable extract_features(const Dataset& d);
FeatureTable extract_features(const Dataset& d, const CardIndex& index);

/// Lower median: element at index ceil(n/2)-1 of the sorted values.
/// Throws Error{EmptyInput} for an empty list.
double median(std::span<const double> values);
std::int64_t median(std::span<const std::int64_t> values);

void write_features(const FeatureTable& table, std::ostream& out);
FeatureTable read_features(std::istream& in);

}  // namespace fraudlens
