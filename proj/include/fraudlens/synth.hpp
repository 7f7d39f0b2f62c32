#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlens/ingest.hpp"

namespace fraudlens {

enum class CardKind : std::uint8_t {
  Honest,
  DoubleMachineGun,
  PennyHunter,
  BurstyPoster,
};

std::string_view to_string(CardKind kind);
CardKind card_kind_from_string(std::string_view name);

struct AmountModel {
  enum class Type { Fixed, SmallRoundSet, Varied };

  Type type = Type::Fixed;
  // Fixed: exactly one value. SmallRoundSet: the candidate set. Varied: the
  // amounts of the first txns of each card, in order.
  std::vector<std::int64_t> values;
  // Varied only: inclusive range for the remaining txns.
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static AmountModel fixed(std::int64_t cents);
  static AmountModel small_round_set(std::vector<std::int64_t> cents);
  static AmountModel varied(std::int64_t lo, std::int64_t hi,
                            std::vector<std::int64_t> pinned = {});
};

/// Each inter-arrival time is `base_s`, or with probability `jitter_prob`
/// `base_s - jitter_s` / `base_s + jitter_s` (equally likely). The support
/// therefore has at most three whole-second values.
struct InterArrival {
  std::int64_t base_s = 1;
  std::int64_t jitter_s = 0;
  double jitter_prob = 0.0;
};

/// Clock-time window in seconds since midnight; a card's first txn starts
/// uniformly inside [start_s, end_s).
struct ClockWindow {
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
};

struct ArchetypeSpec {
  CardKind kind = CardKind::DoubleMachineGun;
  std::size_t n_cards = 1;
  std::size_t txns_min = 1;
  std::size_t txns_max = 1;
  InterArrival inter_arrival;
  AmountModel amount_model;
  std::optional<ClockWindow> time_of_day_window;
  std::size_t merchant_fanout = 1;

  // Profiles of the three lockstep behaviors.
  static ArchetypeSpec double_machine_gun(std::size_t n_cards);
  static ArchetypeSpec penny_hunter(std::size_t n_cards);
  static ArchetypeSpec bursty_poster(std::size_t n_cards);
};

/// Background population: txns per card is 1 + floor(exp(N(log_mean,
/// log_sigma))) capped at max_txns; amounts are log-normal, rejected into
/// [amount_lo, amount_hi]; timestamps follow a business-hours profile with a
/// lunch dip.
struct HonestModel {
  double log_mean = 1.0;
  double log_sigma = 1.1;
  std::size_t max_txns = 400;
  std::int64_t amount_lo = 50;
  std::int64_t amount_hi = 50000;
  double amount_log_median = 7.3;  // ln(cents), about $15
  double amount_log_sigma = 1.0;
  std::size_t favorite_merchants = 4;
};

struct SynthConfig {
  std::size_t n_honest_cards = 1000;
  std::size_t n_merchants = 2000;
  std::size_t n_days = 7;
  std::int64_t start_timestamp = 1614556800;  // 2021-03-01T00:00:00Z
  HonestModel honest;
  std::vector<ArchetypeSpec> archetypes;
  double fraud_label_fraction = 1.0;
  double honest_label_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct SynthResult {
  Dataset dataset;
  std::map<std::string, CardKind> ground_truth;
};

/// Throws Error{InvalidConfig} naming the first violated invariant.
void validate(const SynthConfig& config);

SynthResult generate(const SynthConfig& config);

/// One dataset per requested size with exactly that many txns: archetypes as
/// configured, honest cards added until the total is reached.
std::vector<SynthResult> scale_series(const SynthConfig& config,
                                      std::span<const std::size_t> sizes,
                                      std::uint64_t seed);

/// `key = value` lines, `#` comments. See README for the key list.
SynthConfig parse_synth_config(std::istream& in);
SynthConfig parse_synth_config_file(const std::string& path);

void write_ground_truth(const std::map<std::string, CardKind>& truth,
                        std::ostream& out);
std::map<std::string, CardKind> read_ground_truth(std::istream& in);

}  // namespace fraudlens
