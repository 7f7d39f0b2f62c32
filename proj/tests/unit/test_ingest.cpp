#include <doctest.h>

#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "fraudlens/calendar.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/ingest.hpp"

using namespace fraudlens;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_transactions(in);
}

std::string write(const Dataset& d) {
  std::ostringstream out;
  write_dataset(d, out);
  return out.str();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoFailure;
}

}  // namespace

TEST_CASE("header-only file gives an empty dataset") {
  const Dataset d = parse("card_id,merchant_id,amount_cents,timestamp\n");
  CHECK(d.size() == 0);
  CHECK(d.suspicion_dim() == 0);
}

TEST_CASE("empty input gives an empty dataset") {
  CHECK(parse("").size() == 0);
}

TEST_CASE("single row") {
  const Dataset d = parse("card_id,merchant_id,amount_cents,timestamp\nc1,m1,99,1000\n");
  REQUIRE(d.size() == 1);
  const Transaction t = d.transaction(0);
  CHECK(t.card_id == "c1");
  CHECK(t.merchant_id == "m1");
  CHECK(t.amount_cents == 99);
  CHECK(t.timestamp == 1000);
  CHECK(t.fraud_label == FraudLabel::Unknown);
  CHECK(d.time_window() == TimeWindow{1000, 1000});
}

TEST_CASE("negative amount names the row") {
  const std::string text =
      "card_id,merchant_id,amount_cents,timestamp\nc1,m1,5,1\nc1,m1,-5,2\n";
  try {
    parse(text);
    FAIL("expected NegativeAmount");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeAmount);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("malformed rows") {
  const std::string head = "card_id,merchant_id,amount_cents,timestamp,label\n";
  CHECK(kind_of([&] { parse(head + "c1,m1,abc,1,\n"); }) == ErrorKind::MalformedRow);
  CHECK(kind_of([&] { parse(head + "c1,m1,1,1.5,\n"); }) == ErrorKind::MalformedRow);
  CHECK(kind_of([&] { parse(head + "c1,m1\n"); }) == ErrorKind::MalformedRow);
  CHECK(kind_of([&] { parse(head + "c1,m1,1,1,maybe\n"); }) == ErrorKind::MalformedRow);
  CHECK(kind_of([&] { parse("card_id,amount_cents,timestamp\nc1,1,1\n"); }) ==
        ErrorKind::MalformedRow);
}

TEST_CASE("schema maps custom headers and suspicion columns") {
  Schema s;
  s.card_column = "card";
  s.merchant_column = "shop";
  s.amount_column = "cents";
  s.timestamp_column = "ts";
  std::istringstream in("ts,shop,card,cents,s1,s0,extra\n7,m,c,3,4,5,x\n");
  const Dataset d = parse_transactions(in, s);
  REQUIRE(d.size() == 1);
  CHECK(d.suspicion_dim() == 2);
  const Transaction t = d.transaction(0);
  CHECK(t.card_id == "c");
  CHECK(t.merchant_id == "m");
  CHECK(t.suspicion_counts == std::vector<std::uint32_t>{5, 4});
}

TEST_CASE("write_dataset row counts") {
  CHECK(write(Dataset()) == "card_id,merchant_id,amount_cents,timestamp,label\n");
  Dataset d;
  d.append("a", "m", 1, 10);
  d.append("b", "m", 2, 11, FraudLabel::Fraud);
  d.append("a", "n", 3, 12, FraudLabel::Honest);
  std::ostringstream out;
  CHECK(write_dataset(d, out) == 3);
}

TEST_CASE("round trip on generated datasets") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    oracle::RandomDatasetShape shape;
    shape.suspicion_dim = seed % 4;
    Dataset d = oracle::random_dataset(seed, shape);
    if (seed % 5 == 0) {
      const std::vector<std::uint32_t> counts(shape.suspicion_dim, 1);
      d.append("needs,\"quoting\"", "m x", 0, 1614556800, FraudLabel::Fraud, counts);
    }
    CHECK(parse(write(d)) == d);
  }
}

TEST_CASE("anonymize determinism and salting") {
  CHECK(anonymize_token("c1", "salt", true) == anonymize_token("c1", "salt", true));
  CHECK(anonymize_token("c1", "salt", true) != anonymize_token("c1", "pepper", true));
  CHECK(anonymize_token("c1", "salt", true) != anonymize_token("c1", "salt", false));
  CHECK(anonymize_token("c1", "salt", true).size() == 16);
  CHECK(kind_of([] { anonymize_token("c1", "", true); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { anonymize(Dataset(), ""); }) == ErrorKind::InvalidParams);
}

TEST_CASE("anonymize keeps day-of-month and time-of-day") {
  // 2021-03-15 14:32:00 UTC
  const std::int64_t ts = days_from_civil({2021, 3, 15}) * kSecondsPerDay + 14 * 3600 + 32 * 60;
  Dataset d;
  d.append("c1", "m1", 250, ts);
  const Dataset a = anonymize(d, "salt");
  const std::int64_t out = a.transaction(0).timestamp;
  const CivilDate date = civil_from_days(floor_div(out, kSecondsPerDay));
  CHECK(date.day == 15);
  CHECK(seconds_of_day(out) == 14 * 3600 + 32 * 60);
  CHECK(date.year >= 2000);
  CHECK(date.year <= 2099);
  CHECK(date.year != 2021);
  CHECK(days_in_month(date.year, date.month) == 31);
  CHECK(a.transaction(0).amount_cents == 250);
}

TEST_CASE("anonymize preserves structure") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    oracle::RandomDatasetShape shape;
    shape.time_span = 400 * 86400;  // spans several months and a year boundary
    shape.t0 = days_from_civil({2020, 11, 1}) * kSecondsPerDay;
    const Dataset d = oracle::random_dataset(seed, shape);
    const Dataset a = anonymize(d, "s" + std::to_string(seed));
    REQUIRE(a.size() == d.size());
    CHECK(a.n_cards() == d.n_cards());
    CHECK(a.n_merchants() == d.n_merchants());
    std::set<std::string> tokens(a.card_tokens().begin(), a.card_tokens().end());
    CHECK(tokens.size() == d.n_cards());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const TxnRecord& x = d.record(i);
      const TxnRecord& y = a.record(i);
      // Interning is first-appearance order, so equal indices mean the card
      // partition is unchanged.
      CHECK(x.card == y.card);
      CHECK(x.merchant == y.merchant);
      CHECK(x.amount_cents == y.amount_cents);
      CHECK(x.label == y.label);
      CHECK(seconds_of_day(x.timestamp) == seconds_of_day(y.timestamp));
      CHECK(civil_from_days(floor_div(x.timestamp, kSecondsPerDay)).day ==
            civil_from_days(floor_div(y.timestamp, kSecondsPerDay)).day);
    }
    // Gaps between txns in the same month survive.
    for (std::size_t i = 1; i < d.size(); ++i) {
      const auto mx = civil_from_days(floor_div(d.record(i).timestamp, kSecondsPerDay));
      const auto my = civil_from_days(floor_div(d.record(i - 1).timestamp, kSecondsPerDay));
      if (mx.year == my.year && mx.month == my.month) {
        CHECK(d.record(i).timestamp - d.record(i - 1).timestamp ==
              a.record(i).timestamp - a.record(i - 1).timestamp);
      }
    }
  }
}
