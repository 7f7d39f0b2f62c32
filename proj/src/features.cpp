#include "fraudlens/features.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "fraudlens/calendar.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/exact.hpp"

namespace fraudlens {

bool is_feature(std::string_view name) {
  return std::find(kFeatureNames.begin(), kFeatureNames.end(), name) !=
         kFeatureNames.end();
}

double feature_value(const CardFeatures& f, std::string_view name) {
  if (name == "n_txns") return static_cast<double>(f.n_txns);
  if (name == "n_distinct_iat") return static_cast<double>(f.n_distinct_iat);
  if (name == "n_distinct_amounts") return static_cast<double>(f.n_distinct_amounts);
  if (name == "median_amount_cents") return static_cast<double>(f.median_amount_cents);
  if (name == "median_iat_s") return static_cast<double>(f.median_iat_s);
  if (name == "variance_iat_s2") return f.variance_iat_s2;
  if (name == "variance_amount") return f.variance_amount;
  if (name == "n_merchants") return static_cast<double>(f.n_merchants);
  if (name == "fraction_night") return f.fraction_night;
  throw Error(ErrorKind::UnknownFeature, "'" + std::string(name) + "'");
}

FeatureTable::FeatureTable(std::vector<CardFeatures> rows) : rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end(),
            [](const CardFeatures& a, const CardFeatures& b) {
              return a.card_id < b.card_id;
            });
  index_.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) index_.emplace(rows_[i].card_id, i);
}

std::optional<std::size_t> FeatureTable::find(std::string_view card_id) const {
  const auto it = index_.find(std::string(card_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> FeatureTable::column(std::string_view name) const {
  if (!is_feature(name)) {
    throw Error(ErrorKind::UnknownFeature, "'" + std::string(name) + "'");
  }
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const CardFeatures& f : rows_) out.push_back(feature_value(f, name));
  return out;
}

CardIndex build_card_index(const Dataset& d) {
  CardIndex index;
  const std::size_t n_cards = d.n_cards();
  index.offsets.assign(n_cards + 1, 0);
  for (const TxnRecord& r : d.records()) ++index.offsets[r.card + 1];
  std::partial_sum(index.offsets.begin(), index.offsets.end(), index.offsets.begin());

  index.txns.resize(d.size());
  std::vector<std::size_t> cursor(index.offsets.begin(), index.offsets.end() - 1);
  for (std::size_t i = 0; i < d.size(); ++i) index.txns[cursor[d.record(i).card]++] = i;

  const auto& records = d.records();
  for (std::size_t c = 0; c < n_cards; ++c) {
    auto first = index.txns.begin() + static_cast<std::ptrdiff_t>(index.offsets[c]);
    auto last = index.txns.begin() + static_cast<std::ptrdiff_t>(index.offsets[c + 1]);
    // Groups are filled in ingestion order, so a stable sort keeps ties there.
    if (!std::is_sorted(first, last, [&](std::size_t a, std::size_t b) {
          return records[a].timestamp < records[b].timestamp;
        })) {
      std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
        return records[a].timestamp < records[b].timestamp;
      });
    }
  }
  return index;
}

namespace {

// Sorts in place; returns (distinct count, lower median).
std::pair<std::int64_t, std::int64_t> distinct_and_median(std::vector<std::int64_t>& v) {
  std::sort(v.begin(), v.end());
  std::int64_t distinct = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == 0 || v[i] != v[i - 1]) ++distinct;
  }
  return {distinct, v[(v.size() + 1) / 2 - 1]};
}

double population_variance(i128 sum, i128 sum_sq, std::int64_t n) {
  if (n < 2) return 0.0;
  const i128 num = sum_sq * n - sum * sum;
  return ratio_to_double(static_cast<u128>(num), static_cast<u128>(i128{n} * n));
}

bool is_night(std::int64_t timestamp) {
  const std::int64_t sod = seconds_of_day(timestamp);
  return sod >= 22 * 3600 || sod < 6 * 3600;
}

}  // namespace

FeatureTable extract_features(const Dataset& d) {
  return extract_features(d, build_card_index(d));
}

FeatureTable extract_features(const Dataset& d, const CardIndex& index) {
  const auto& records = d.records();
  std::vector<CardFeatures> rows;
  rows.reserve(d.n_cards());
  std::vector<std::int64_t> amounts, iats;
  std::vector<std::uint32_t> merchants;

  for (std::uint32_t c = 0; c < d.n_cards(); ++c) {
    const auto txns = index.of(c);
    CardFeatures f;
    f.card_id = d.card_token(c);
    f.n_txns = static_cast<std::int64_t>(txns.size());
    if (txns.empty()) {
      rows.push_back(std::move(f));
      continue;
    }

    amounts.clear();
    iats.clear();
    merchants.clear();
    i128 amount_sum = 0, amount_sq = 0, iat_sum = 0, iat_sq = 0;
    std::int64_t night = 0;
    for (std::size_t k = 0; k < txns.size(); ++k) {
      const TxnRecord& r = records[txns[k]];
      amounts.push_back(r.amount_cents);
      amount_sum += r.amount_cents;
      amount_sq += i128{r.amount_cents} * r.amount_cents;
      merchants.push_back(r.merchant);
      if (is_night(r.timestamp)) ++night;
      if (k > 0) {
        const std::int64_t gap = r.timestamp - records[txns[k - 1]].timestamp;
        iats.push_back(gap);
        iat_sum += gap;
        iat_sq += i128{gap} * gap;
      }
    }

    std::tie(f.n_distinct_amounts, f.median_amount_cents) = distinct_and_median(amounts);
    if (!iats.empty()) {
      std::tie(f.n_distinct_iat, f.median_iat_s) = distinct_and_median(iats);
    }
    std::sort(merchants.begin(), merchants.end());
    f.n_merchants = std::unique(merchants.begin(), merchants.end()) - merchants.begin();
    f.variance_amount = population_variance(amount_sum, amount_sq, f.n_txns);
    f.variance_iat_s2 =
        population_variance(iat_sum, iat_sq, static_cast<std::int64_t>(iats.size()));
    f.fraction_night = static_cast<double>(night) / static_cast<double>(f.n_txns);
    rows.push_back(std::move(f));
  }
  return FeatureTable(std::move(rows));
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() + 1) / 2 - 1);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::int64_t median(std::span<const std::int64_t> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty list");
  std::vector<std::int64_t> v(values.begin(), values.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() + 1) / 2 - 1);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void write_features(const FeatureTable& table, std::ostream& out) {
  std::string buf = "card_id";
  for (const auto name : kFeatureNames) {
    buf += ',';
    buf += name;
  }
  buf += '\n';
  for (const CardFeatures& f : table.rows()) {
    csv::append_field(buf, f.card_id);
    for (const auto v : {f.n_txns, f.n_distinct_iat, f.n_distinct_amounts,
                         f.median_amount_cents, f.median_iat_s}) {
      buf += ',';
      buf += std::to_string(v);
    }
    buf += ',' + csv::format_double(f.variance_iat_s2);
    buf += ',' + csv::format_double(f.variance_amount);
    buf += ',' + std::to_string(f.n_merchants);
    buf += ',' + csv::format_double(f.fraction_night);
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error(ErrorKind::IoFailure, "write failed");
}

FeatureTable read_features(std::istream& in) {
  std::string line;
  std::vector<std::string> fields;
  if (!std::getline(in, line)) return {};
  std::vector<CardFeatures> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    csv::split(line, fields);
    if (fields.size() != kFeatureNames.size() + 1) {
      throw Error(ErrorKind::MalformedRow, "features row " + std::to_string(row) +
                                               ": expected " +
                                               std::to_string(kFeatureNames.size() + 1) +
                                               " fields");
    }
    const auto int_at = [&](std::size_t i) {
      const auto v = csv::parse_int<std::int64_t>(fields[i]);
      if (!v) {
        throw Error(ErrorKind::MalformedRow,
                    "features row " + std::to_string(row) + ": bad integer '" +
                        fields[i] + "'");
      }
      return *v;
    };
    const auto double_at = [&](std::size_t i) {
      const auto v = csv::parse_double(fields[i]);
      if (!v) {
        throw Error(ErrorKind::MalformedRow,
                    "features row " + std::to_string(row) + ": bad number '" +
                        fields[i] + "'");
      }
      return *v;
    };
    CardFeatures f;
    f.card_id = fields[0];
    f.n_txns = int_at(1);
    f.n_distinct_iat = int_at(2);
    f.n_distinct_amounts = int_at(3);
    f.median_amount_cents = int_at(4);
    f.median_iat_s = int_at(5);
    f.variance_iat_s2 = double_at(6);
    f.variance_amount = double_at(7);
    f.n_merchants = int_at(8);
    f.fraction_night = double_at(9);
    rows.push_back(std::move(f));
  }
  return FeatureTable(std::move(rows));
}

}  // namespace fraudlens
