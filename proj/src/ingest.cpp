#include "fraudlens/ingest.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "fraudlens/calendar.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/random.hpp"

namespace fraudlens {

std::string_view to_string(FraudLabel label) {
  switch (label) {
    case FraudLabel::Fraud:
      return "fraud";
    case FraudLabel::Honest:
      return "honest";
    case FraudLabel::Unknown:
      break;
  }
  return "";
}

void Dataset::reserve(std::size_t n_txns) {
  records_.reserve(n_txns);
  suspicion_.reserve(n_txns * suspicion_dim_);
}

std::uint32_t Dataset::intern(
    std::vector<std::string>& tokens,
    std::unordered_map<std::string, std::uint32_t>& index,
    std::string_view token) {
  auto [it, inserted] = index.try_emplace(std::string(token),
                                          static_cast<std::uint32_t>(tokens.size()));
  if (inserted) tokens.emplace_back(token);
  return it->second;
}

void Dataset::append(std::string_view card_id, std::string_view merchant_id,
                     std::int64_t amount_cents, std::int64_t timestamp,
                     FraudLabel label,
                     std::span<const std::uint32_t> suspicion_counts) {
  if (amount_cents < 0) {
    throw Error(ErrorKind::NegativeAmount,
                "amount " + std::to_string(amount_cents) + " for card " +
                    std::string(card_id));
  }
  if (suspicion_counts.size() != suspicion_dim_) {
    throw Error(ErrorKind::MalformedRow,
                "expected " + std::to_string(suspicion_dim_) +
                    " suspicion counts, got " +
                    std::to_string(suspicion_counts.size()));
  }
  TxnRecord rec;
  rec.card = intern(card_tokens_, card_index_, card_id);
  rec.merchant = intern(merchant_tokens_, merchant_index_, merchant_id);
  rec.amount_cents = amount_cents;
  rec.timestamp = timestamp;
  rec.label = label;
  if (records_.empty()) {
    window_ = {timestamp, timestamp};
  } else {
    window_.start = std::min(window_.start, timestamp);
    window_.end = std::max(window_.end, timestamp);
  }
  records_.push_back(rec);
  suspicion_.insert(suspicion_.end(), suspicion_counts.begin(),
                    suspicion_counts.end());
}

void Dataset::append(const Transaction& txn) {
  append(txn.card_id, txn.merchant_id, txn.amount_cents, txn.timestamp,
         txn.fraud_label, txn.suspicion_counts);
}

std::span<const std::uint32_t> Dataset::suspicion_counts(std::size_t i) const {
  return std::span<const std::uint32_t>(suspicion_).subspan(
      i * suspicion_dim_, suspicion_dim_);
}

Transaction Dataset::transaction(std::size_t i) const {
  const TxnRecord& r = records_[i];
  const auto counts = suspicion_counts(i);
  return Transaction{card_tokens_[r.card],
                     merchant_tokens_[r.merchant],
                     r.amount_cents,
                     r.timestamp,
                     {counts.begin(), counts.end()},
                     r.label};
}

std::int64_t Dataset::find_card(std::string_view card_id) const {
  const auto it = card_index_.find(std::string(card_id));
  return it == card_index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

bool Dataset::operator==(const Dataset& other) const {
  return suspicion_dim_ == other.suspicion_dim_ && window_ == other.window_ &&
         records_ == other.records_ && suspicion_ == other.suspicion_ &&
         card_tokens_ == other.card_tokens_ &&
         merchant_tokens_ == other.merchant_tokens_;
}

namespace {

struct ColumnMap {
  int card = -1;
  int merchant = -1;
  int amount = -1;
  int timestamp = -1;
  int label = -1;
  std::vector<int> suspicion;  // column index for s0, s1, ...
};

ColumnMap map_header(const std::vector<std::string>& header,
                     const Schema& schema) {
  ColumnMap cols;
  std::map<std::size_t, int> suspicion;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    std::string name = header[i];
    if (!name.empty() && name.back() == '\r') name.pop_back();
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.erase(0, 3);
    if (name == schema.card_column) {
      cols.card = i;
    } else if (name == schema.merchant_column) {
      cols.merchant = i;
    } else if (name == schema.amount_column) {
      cols.amount = i;
    } else if (name == schema.timestamp_column) {
      cols.timestamp = i;
    } else if (name == schema.label_column) {
      cols.label = i;
    } else if (name.size() > schema.suspicion_prefix.size() &&
               name.starts_with(schema.suspicion_prefix)) {
      const auto idx = csv::parse_int<std::size_t>(
          std::string_view(name).substr(schema.suspicion_prefix.size()));
      if (idx) suspicion[*idx] = i;
    }
  }
  for (const auto& [idx, col] : suspicion) {
    if (idx != cols.suspicion.size()) {
      throw Error(ErrorKind::MalformedRow,
                  "header: suspicion columns must be numbered contiguously "
                  "from 0");
    }
    cols.suspicion.push_back(col);
  }
  const auto require = [](int col, const std::string& name) {
    if (col < 0) {
      throw Error(ErrorKind::MalformedRow,
                  "header: missing required column '" + name + "'");
    }
  };
  require(cols.card, schema.card_column);
  require(cols.merchant, schema.merchant_column);
  require(cols.amount, schema.amount_column);
  require(cols.timestamp, schema.timestamp_column);
  return cols;
}

[[noreturn]] void row_error(ErrorKind kind, std::size_t row,
                            const std::string& reason) {
  throw Error(kind, "row " + std::to_string(row) + ": " + reason);
}

FraudLabel parse_label(std::string_view s, std::size_t row) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  if (s.empty()) return FraudLabel::Unknown;
  if (s == "fraud") return FraudLabel::Fraud;
  if (s == "honest") return FraudLabel::Honest;
  row_error(ErrorKind::MalformedRow, row,
            "unrecognized label '" + std::string(s) + "'");
}

}  // namespace

Dataset parse_transactions(std::istream& source, const Schema& schema) {
  std::string line;
  std::vector<std::string> fields;
  if (!std::getline(source, line)) return Dataset(0);
  csv::split(line, fields);
  const ColumnMap cols = map_header(fields, schema);

  Dataset d(cols.suspicion.size());
  std::vector<std::uint32_t> counts(cols.suspicion.size());
  const int max_col = std::max({cols.card, cols.merchant, cols.amount,
                                cols.timestamp, cols.label,
                                cols.suspicion.empty()
                                    ? -1
                                    : *std::max_element(cols.suspicion.begin(),
                                                        cols.suspicion.end())});
  std::size_t row = 0;
  while (std::getline(source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    csv::split(line, fields);
    if (static_cast<int>(fields.size()) <= max_col) {
      row_error(ErrorKind::MalformedRow, row,
                "expected at least " + std::to_string(max_col + 1) +
                    " fields, got " + std::to_string(fields.size()));
    }
    const std::string& card = fields[cols.card];
    const std::string& merchant = fields[cols.merchant];
    if (card.empty()) row_error(ErrorKind::MalformedRow, row, "empty card_id");
    if (merchant.empty()) {
      row_error(ErrorKind::MalformedRow, row, "empty merchant_id");
    }
    const auto amount = csv::parse_int<std::int64_t>(fields[cols.amount]);
    if (!amount) {
      row_error(ErrorKind::MalformedRow, row,
                "unparseable amount '" + fields[cols.amount] + "'");
    }
    if (*amount < 0) {
      row_error(ErrorKind::NegativeAmount, row,
                "negative amount " + std::to_string(*amount));
    }
    const auto ts = csv::parse_int<std::int64_t>(fields[cols.timestamp]);
    if (!ts) {
      row_error(ErrorKind::MalformedRow, row,
                "unparseable timestamp '" + fields[cols.timestamp] + "'");
    }
    const FraudLabel label =
        cols.label >= 0 ? parse_label(fields[cols.label], row)
                        : FraudLabel::Unknown;
    for (std::size_t k = 0; k < cols.suspicion.size(); ++k) {
      const auto v = csv::parse_int<std::uint32_t>(fields[cols.suspicion[k]]);
      if (!v) {
        row_error(ErrorKind::MalformedRow, row,
                  "unparseable suspicion count s" + std::to_string(k));
      }
      counts[k] = *v;
    }
    d.append(card, merchant, *amount, *ts, label, counts);
  }
  return d;
}

Dataset parse_transactions_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  return parse_transactions(in, schema);
}

std::size_t write_dataset(const Dataset& d, std::ostream& sink) {
  std::string buf = "card_id,merchant_id,amount_cents,timestamp,label";
  for (std::size_t k = 0; k < d.suspicion_dim(); ++k) {
    buf += ",s" + std::to_string(k);
  }
  buf += '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const TxnRecord& r = d.record(i);
    csv::append_field(buf, d.card_token(r.card));
    buf += ',';
    csv::append_field(buf, d.merchant_token(r.merchant));
    buf += ',';
    buf += std::to_string(r.amount_cents);
    buf += ',';
    buf += std::to_string(r.timestamp);
    buf += ',';
    buf += to_string(r.label);
    for (const std::uint32_t c : d.suspicion_counts(i)) {
      buf += ',';
      buf += std::to_string(c);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      sink.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  sink.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  sink.flush();
  if (!sink) throw Error(ErrorKind::IoFailure, "write failed");
  return d.size();
}

std::size_t write_dataset_file(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  return write_dataset(d, out);
}

namespace {

using HashKey = std::array<unsigned char, crypto_generichash_KEYBYTES_MIN>;

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error(ErrorKind::IoFailure, "libsodium init failed");
}

HashKey derive_key(std::string_view salt) {
  ensure_sodium();
  HashKey key{};
  crypto_generichash(key.data(), key.size(),
                     reinterpret_cast<const unsigned char*>(salt.data()),
                     salt.size(), nullptr, 0);
  return key;
}

std::uint64_t keyed_hash64(const HashKey& key, char domain,
                           std::string_view id) {
  crypto_generichash_state state;
  crypto_generichash_init(&state, key.data(), key.size(), 8);
  const auto d = static_cast<unsigned char>(domain);
  crypto_generichash_update(&state, &d, 1);
  crypto_generichash_update(
      &state, reinterpret_cast<const unsigned char*>(id.data()), id.size());
  std::array<unsigned char, 8> out{};
  crypto_generichash_final(&state, out.data(), out.size());
  std::uint64_t v = 0;
  for (const unsigned char b : out) v = (v << 8) | b;
  return v;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = kDigits[v & 0xF];
    v >>= 4;
  }
  return s;
}

std::vector<std::string> hash_tokens(const std::vector<std::string>& ids,
                                     const HashKey& key, char domain) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  std::unordered_map<std::uint64_t, std::size_t> seen;
  seen.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::uint64_t h = keyed_hash64(key, domain, ids[i]);
    const auto [it, inserted] = seen.emplace(h, i);
    if (!inserted) {
      throw Error(ErrorKind::HashCollision,
                  "ids '" + ids[it->second] + "' and '" + ids[i] +
                      "' share a token; choose another salt");
    }
    tokens.push_back(hex64(h));
  }
  return tokens;
}

// Calendar remapping: years go to distinct years in [2000, 2099] with the
// same leap-ness, months are permuted within their day-length class. Both
// maps are injective, so (year, month) pairs stay distinct and every
// day-of-month remains valid.
class CalendarMap {
 public:
  CalendarMap(const Dataset& d, const HashKey& key) {
    SplitMix64 rng(keyed_hash64(key, 't', "calendar"));

    std::vector<std::int64_t> leap_pool, common_pool;
    for (std::int64_t y = 2000; y < 2100; ++y) {
      (is_leap_year(y) ? leap_pool : common_pool).push_back(y);
    }
    shuffle(leap_pool, rng);
    shuffle(common_pool, rng);

    std::vector<std::int64_t> years;
    for (const TxnRecord& r : d.records()) {
      years.push_back(civil_from_days(floor_div(r.timestamp, kSecondsPerDay)).year);
    }
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());
    std::size_t next_leap = 0, next_common = 0;
    for (const std::int64_t y : years) {
      auto& pool = is_leap_year(y) ? leap_pool : common_pool;
      auto& next = is_leap_year(y) ? next_leap : next_common;
      if (next >= pool.size()) {
        throw Error(ErrorKind::InvalidParams,
                    "dataset spans too many distinct years to obfuscate");
      }
      years_[y] = pool[next++];
    }

    for (const auto& cls : {std::vector<unsigned>{1, 3, 5, 7, 8, 10, 12},
                            std::vector<unsigned>{4, 6, 9, 11}}) {
      std::vector<unsigned> target = cls;
      shuffle(target, rng);
      for (std::size_t i = 0; i < cls.size(); ++i) months_[cls[i]] = target[i];
    }
    months_[2] = 2;
  }

  std::int64_t remap(std::int64_t timestamp) const {
    const std::int64_t day = floor_div(timestamp, kSecondsPerDay);
    const std::int64_t sod = timestamp - day * kSecondsPerDay;
    CivilDate date = civil_from_days(day);
    date.year = years_.at(date.year);
    date.month = months_[date.month];
    return days_from_civil(date) * kSecondsPerDay + sod;
  }

 private:
  template <typename T>
  static void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[rng.below(i)]);
    }
  }

  std::map<std::int64_t, std::int64_t> years_;
  std::array<unsigned, 13> months_{};
};

}  // namespace

std::string anonymize_token(std::string_view id, std::string_view salt,
                            bool is_card) {
  if (salt.empty()) throw Error(ErrorKind::InvalidParams, "empty salt");
  return hex64(keyed_hash64(derive_key(salt), is_card ? 'c' : 'm', id));
}

Dataset anonymize(const Dataset& d, std::string_view salt) {
  if (salt.empty()) throw Error(ErrorKind::InvalidParams, "empty salt");
  const HashKey key = derive_key(salt);
  const auto cards = hash_tokens(d.card_tokens(), key, 'c');
  const auto merchants = hash_tokens(d.merchant_tokens(), key, 'm');
  const CalendarMap calendar(d, key);

  Dataset out(d.suspicion_dim());
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const TxnRecord& r = d.record(i);
    out.append(cards[r.card], merchants[r.merchant], r.amount_cents,
               calendar.remap(r.timestamp), r.label, d.suspicion_counts(i));
  }
  return out;
}

}  // namespace fraudlens
