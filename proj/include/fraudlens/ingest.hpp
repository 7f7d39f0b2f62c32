#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fraudlens {

enum class FraudLabel : std::uint8_t { Unknown = 0, Honest = 1, Fraud = 2 };

std::string_view to_string(FraudLabel label);

/// One ledger row, materialized with string tokens. The Dataset stores rows
/// in interned form; this is the value type used at API boundaries.
struct Transaction {
  std::string card_id;
  std::string merchant_id;
  std::int64_t amount_cents = 0;
  std::int64_t timestamp = 0;
  std::vector<std::uint32_t> suspicion_counts;
  FraudLabel fraud_label = FraudLabel::Unknown;

  bool operator==(const Transaction&) const = default;
};

/// Interned row: card and merchant are indices into the dataset's token
/// tables, assigned in order of first appearance.
struct TxnRecord {
  std::uint32_t card = 0;
  std::uint32_t merchant = 0;
  std::int64_t amount_cents = 0;
  std::int64_t timestamp = 0;
  FraudLabel label = FraudLabel::Unknown;

  bool operator==(const TxnRecord&) const = default;
};

struct TimeWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool operator==(const TimeWindow&) const = default;
};

/// Append-only transaction collection. Iteration order equals ingestion
/// order; the time window is the observed [min, max] timestamp range.
class Dataset {
 public:
  explicit Dataset(std::size_t suspicion_dim = 0)
      : suspicion_dim_(suspicion_dim) {}

  void reserve(std::size_t n_txns);

  void append(std::string_view card_id, std::string_view merchant_id,
              std::int64_t amount_cents, std::int64_t timestamp,
              FraudLabel label = FraudLabel::Unknown,
              std::span<const std::uint32_t> suspicion_counts = {});
  void append(const Transaction& txn);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t suspicion_dim() const noexcept { return suspicion_dim_; }
  TimeWindow time_window() const noexcept { return window_; }

  const std::vector<TxnRecord>& records() const noexcept { return records_; }
  const TxnRecord& record(std::size_t i) const { return records_[i]; }
  std::span<const std::uint32_t> suspicion_counts(std::size_t i) const;
  Transaction transaction(std::size_t i) const;

  std::size_t n_cards() const noexcept { return card_tokens_.size(); }
  std::size_t n_merchants() const noexcept { return merchant_tokens_.size(); }
  const std::string& card_token(std::uint32_t card) const {
    return card_tokens_[card];
  }
  const std::string& merchant_token(std::uint32_t merchant) const {
    return merchant_tokens_[merchant];
  }
  const std::vector<std::string>& card_tokens() const noexcept {
    return card_tokens_;
  }
  const std::vector<std::string>& merchant_tokens() const noexcept {
    return merchant_tokens_;
  }

  /// Index of a card token, or -1 when absent.
  std::int64_t find_card(std::string_view card_id) const;

  bool operator==(const Dataset& other) const;

 private:
  std::uint32_t intern(std::vector<std::string>& tokens,
                       std::unordered_map<std::string, std::uint32_t>& index,
                       std::string_view token);

  std::size_t suspicion_dim_ = 0;
  std::vector<TxnRecord> records_;
  std::vector<std::uint32_t> suspicion_;
  std::vector<std::string> card_tokens_;
  std::vector<std::string> merchant_tokens_;
  std::unordered_map<std::string, std::uint32_t> card_index_;
  std::unordered_map<std::string, std::uint32_t> merchant_index_;
  TimeWindow window_;
};

/// Header names mapped onto Transaction fields. Suspicion columns are every
/// header of the form `<suspicion_prefix><digits>`, ordered by the digits.
struct Schema {
  std::string card_column = "card_id";
  std::string merchant_column = "merchant_id";
  std::string amount_column = "amount_cents";
  std::string timestamp_column = "timestamp";
  std::string label_column = "label";
  std::string suspicion_prefix = "s";
};

/// Parses delimited text with a header row. Required columns are card,
/// merchant, amount and timestamp; label and suspicion columns are optional.
/// Throws Error{MalformedRow | NegativeAmount} naming the 1-based data row.
Dataset parse_transactions(std::istream& source, const Schema& schema = {});
Dataset parse_transactions_file(const std::string& path,
                                const Schema& schema = {});

/// Writes the canonical format
/// `card_id,merchant_id,amount_cents,timestamp,label,s0..s{F_s-1}`.
/// Returns the number of data rows written.
std::size_t write_dataset(const Dataset& d, std::ostream& sink);
std::size_t write_dataset_file(const Dataset& d, const std::string& path);

/// Replaces card and merchant IDs with salted 64-bit keyed-hash tokens and
/// remaps calendar year/month with a salted permutation. Day-of-month,
/// time-of-day, amounts and labels are preserved. Timestamps are read as UTC.
Dataset anonymize(const Dataset& d, std::string_view salt);

/// Token for a single ID under the given salt (domain-separated by role).
std::string anonymize_token(std::string_view id, std::string_view salt,
                            bool is_card);

}  // namespace fraudlens
