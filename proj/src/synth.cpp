#include "fraudlens/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "fraudlens/calendar.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/random.hpp"

namespace fraudlens {

std::string_view to_string(CardKind kind) {
  switch (kind) {
    case CardKind::Honest:
      return "honest";
    case CardKind::DoubleMachineGun:
      return "double_machine_gun";
    case CardKind::PennyHunter:
      return "penny_hunter";
    case CardKind::BurstyPoster:
      return "bursty_poster";
  }
  return "honest";
}

CardKind card_kind_from_string(std::string_view name) {
  for (const CardKind k : {CardKind::Honest, CardKind::DoubleMachineGun,
                           CardKind::PennyHunter, CardKind::BurstyPoster}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::InvalidConfig,
              "unknown card kind '" + std::string(name) + "'");
}

AmountModel AmountModel::fixed(std::int64_t cents) {
  return {Type::Fixed, {cents}, 0, 0};
}

AmountModel AmountModel::small_round_set(std::vector<std::int64_t> cents) {
  return {Type::SmallRoundSet, std::move(cents), 0, 0};
}

AmountModel AmountModel::varied(std::int64_t lo, std::int64_t hi,
                                std::vector<std::int64_t> pinned) {
  return {Type::Varied, std::move(pinned), lo, hi};
}

ArchetypeSpec ArchetypeSpec::double_machine_gun(std::size_t n_cards) {
  ArchetypeSpec s;
  s.kind = CardKind::DoubleMachineGun;
  s.n_cards = n_cards;
  s.txns_min = s.txns_max = 66;
  s.inter_arrival = {180, 10, 0.3};
  s.amount_model = AmountModel::fixed(99);
  s.merchant_fanout = 1;
  return s;
}

ArchetypeSpec ArchetypeSpec::penny_hunter(std::size_t n_cards) {
  ArchetypeSpec s;
  s.kind = CardKind::PennyHunter;
  s.n_cards = n_cards;
  s.txns_min = s.txns_max = 65;
  s.inter_arrival = {15, 1, 0.3};
  // $1 to $5 in quarter-dollar steps.
  std::vector<std::int64_t> amounts;
  for (std::int64_t c = 100; c <= 500; c += 25) amounts.push_back(c);
  s.amount_model = AmountModel::small_round_set(std::move(amounts));
  s.merchant_fanout = 1;
  return s;
}

ArchetypeSpec ArchetypeSpec::bursty_poster(std::size_t n_cards) {
  ArchetypeSpec s;
  s.kind = CardKind::BurstyPoster;
  s.n_cards = n_cards;
  s.txns_min = s.txns_max = 16;
  s.inter_arrival = {1, 1, 0.3};
  s.amount_model = AmountModel::varied(200, 9999, {4948, 209});
  s.time_of_day_window = ClockWindow{22 * 3600, 22 * 3600 + 300};
  s.merchant_fanout = 2;
  return s;
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, what);
}

void validate_archetype(const ArchetypeSpec& a, std::size_t n_merchants) {
  const std::string name(to_string(a.kind));
  if (a.kind == CardKind::Honest) invalid("archetype kind must not be honest");
  if (a.n_cards == 0) invalid(name + ": n_cards must be positive");
  if (a.txns_min == 0 || a.txns_min > a.txns_max) {
    invalid(name + ": txns_per_card range must satisfy 1 <= min <= max");
  }
  if (a.merchant_fanout == 0 || a.merchant_fanout > n_merchants) {
    invalid(name + ": merchant_fanout must be in [1, n_merchants]");
  }
  const InterArrival& ia = a.inter_arrival;
  if (ia.base_s < 0 || ia.jitter_s < 0 || ia.jitter_s > ia.base_s ||
      ia.jitter_prob < 0.0 || ia.jitter_prob > 1.0) {
    invalid(name + ": inter_arrival needs 0 <= jitter <= base, prob in [0,1]");
  }
  const AmountModel& am = a.amount_model;
  for (const std::int64_t v : am.values) {
    if (v < 0) invalid(name + ": amounts must be non-negative");
  }
  switch (am.type) {
    case AmountModel::Type::Fixed:
      if (am.values.size() != 1) invalid(name + ": fixed_amount needs one value");
      break;
    case AmountModel::Type::SmallRoundSet:
      if (am.values.empty()) invalid(name + ": small_round_set is empty");
      break;
    case AmountModel::Type::Varied:
      if (am.lo < 0 || am.lo > am.hi) invalid(name + ": varied range invalid");
      break;
  }
  if (a.time_of_day_window) {
    const ClockWindow w = *a.time_of_day_window;
    if (w.start_s < 0 || w.end_s > kSecondsPerDay || w.start_s >= w.end_s) {
      invalid(name + ": time_of_day_window must lie within one day");
    }
  }
  switch (a.kind) {
    case CardKind::DoubleMachineGun:
      if (am.type != AmountModel::Type::Fixed) {
        invalid("double_machine_gun requires fixed_amount");
      }
      break;
    case CardKind::PennyHunter:
      if (am.type != AmountModel::Type::SmallRoundSet) {
        invalid("penny_hunter requires small_round_set");
      }
      for (const std::int64_t v : am.values) {
        if (v > 500) invalid("penny_hunter amounts must be <= 500 cents");
      }
      break;
    case CardKind::BurstyPoster: {
      const auto span = static_cast<std::int64_t>(a.txns_max - 1) *
                        (ia.base_s + ia.jitter_s);
      if (span > 300) {
        invalid("bursty_poster txns must fit in a 5-minute window");
      }
      break;
    }
    case CardKind::Honest:
      break;
  }
}

struct RawTxn {
  std::uint32_t card;
  std::uint32_t merchant;
  std::int64_t amount;
  std::int64_t timestamp;
  FraudLabel label;
};

// Relative txn intensity per hour of day (UTC): quiet nights, business-hours
// plateau, lunch dip at 12:00.
constexpr std::array<double, 24> kHourWeights = {
    0.2, 0.15, 0.1, 0.1, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 4.0, 4.0,
    1.5, 3.5, 4.0, 4.0, 4.0, 3.0, 2.0, 1.5, 1.2, 0.8, 0.4, 0.3};

class Generator {
 public:
  Generator(const SynthConfig& config, std::uint64_t seed)
      : config_(config), rng_(seed) {
    double acc = 0.0;
    for (std::size_t h = 0; h < kHourWeights.size(); ++h) {
      acc += kHourWeights[h];
      hour_cdf_[h] = acc;
    }
    // Zipf-like merchant popularity (exponent 1) for background traffic.
    merchant_cdf_.resize(config.n_merchants);
    acc = 0.0;
    for (std::size_t m = 0; m < config.n_merchants; ++m) {
      acc += 1.0 / static_cast<double>(m + 1);
      merchant_cdf_[m] = acc;
    }
  }

  // Injected cards come first in card order; ids are shuffled at the end.
  void add_archetypes() {
    for (const ArchetypeSpec& spec : config_.archetypes) {
      for (std::size_t c = 0; c < spec.n_cards; ++c) add_archetype_card(spec);
    }
  }

  std::size_t n_txns() const { return txns_.size(); }

  /// Adds one honest card with at most `cap` txns; returns its txn count.
  std::size_t add_honest_card(std::size_t cap) {
    const HonestModel& h = config_.honest;
    const double draw = std::exp(h.log_mean + h.log_sigma * rng_.normal());
    std::size_t n = 1 + static_cast<std::size_t>(
                            std::min(draw, static_cast<double>(h.max_txns)));
    n = std::min({n, h.max_txns, cap});
    const auto card = static_cast<std::uint32_t>(kinds_.size());
    kinds_.push_back(CardKind::Honest);

    std::vector<std::uint32_t> favorites(
        std::max<std::size_t>(1, 1 + rng_.below(h.favorite_merchants)));
    for (auto& f : favorites) f = background_merchant();

    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t merchant =
          rng_.bernoulli(0.7) ? favorites[rng_.below(favorites.size())]
                              : background_merchant();
      const auto label = rng_.bernoulli(config_.honest_label_fraction)
                             ? FraudLabel::Honest
                             : FraudLabel::Unknown;
      txns_.push_back({card, merchant, honest_amount(), honest_timestamp(), label});
    }
    return n;
  }

  SynthResult finish() {
    const std::size_t n_cards = kinds_.size();
    std::vector<std::uint32_t> perm(n_cards);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = n_cards; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng_.below(i)]);
    }
    std::vector<std::string> card_ids(n_cards);
    for (std::size_t c = 0; c < n_cards; ++c) card_ids[c] = format_id('c', perm[c], 7);

    std::stable_sort(txns_.begin(), txns_.end(),
                     [](const RawTxn& a, const RawTxn& b) {
                       return a.timestamp < b.timestamp;
                     });
    SynthResult out{Dataset(0), {}};
    out.dataset.reserve(txns_.size());
    std::vector<std::string> merchant_ids(config_.n_merchants);
    for (std::size_t m = 0; m < merchant_ids.size(); ++m) {
      merchant_ids[m] = format_id('m', static_cast<std::uint32_t>(m), 6);
    }
    for (const RawTxn& t : txns_) {
      out.dataset.append(card_ids[t.card], merchant_ids[t.merchant], t.amount,
                         t.timestamp, t.label);
    }
    for (std::size_t c = 0; c < n_cards; ++c) {
      out.ground_truth.emplace(card_ids[c], kinds_[c]);
    }
    return out;
  }

 private:
  static std::string format_id(char prefix, std::uint32_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%0*u", prefix, width, v);
    return buf;
  }

  std::uint32_t background_merchant() {
    const double u = rng_.uniform() * merchant_cdf_.back();
    const auto it = std::upper_bound(merchant_cdf_.begin(), merchant_cdf_.end(), u);
    return static_cast<std::uint32_t>(
        std::min<std::size_t>(it - merchant_cdf_.begin(), merchant_cdf_.size() - 1));
  }

  std::int64_t honest_amount() {
    const HonestModel& h = config_.honest;
    while (true) {
      const double v = std::exp(h.amount_log_median + h.amount_log_sigma * rng_.normal());
      const auto cents = static_cast<std::int64_t>(std::llround(v));
      if (cents >= h.amount_lo && cents <= h.amount_hi) return cents;
    }
  }

  std::int64_t honest_timestamp() {
    const auto day = static_cast<std::int64_t>(rng_.below(config_.n_days));
    const double u = rng_.uniform() * hour_cdf_.back();
    const auto hour = static_cast<std::int64_t>(
        std::upper_bound(hour_cdf_.begin(), hour_cdf_.end(), u) - hour_cdf_.begin());
    const std::int64_t sod = std::min<std::int64_t>(hour, 23) * 3600 +
                             static_cast<std::int64_t>(rng_.below(3600));
    return config_.start_timestamp + day * kSecondsPerDay + sod;
  }

  void add_archetype_card(const ArchetypeSpec& spec) {
    const auto card = static_cast<std::uint32_t>(kinds_.size());
    kinds_.push_back(spec.kind);
    const auto n = static_cast<std::size_t>(
        rng_.between(static_cast<std::int64_t>(spec.txns_min),
                     static_cast<std::int64_t>(spec.txns_max)));

    std::vector<std::uint32_t> merchants;
    while (merchants.size() < spec.merchant_fanout) {
      const auto m = static_cast<std::uint32_t>(rng_.below(config_.n_merchants));
      if (std::find(merchants.begin(), merchants.end(), m) == merchants.end()) {
        merchants.push_back(m);
      }
    }

    const InterArrival& ia = spec.inter_arrival;
    const std::int64_t span = static_cast<std::int64_t>(n - 1) * ia.base_s;
    const auto day = static_cast<std::int64_t>(rng_.below(config_.n_days));
    std::int64_t sod = 0;
    if (spec.time_of_day_window) {
      sod = rng_.between(spec.time_of_day_window->start_s,
                         spec.time_of_day_window->end_s - 1);
    } else {
      sod = rng_.between(0, std::max<std::int64_t>(0, kSecondsPerDay - 1 - span));
    }
    std::int64_t ts = config_.start_timestamp + day * kSecondsPerDay + sod;

    const AmountModel& am = spec.amount_model;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) {
        std::int64_t gap = ia.base_s;
        if (rng_.bernoulli(ia.jitter_prob)) {
          gap += rng_.bernoulli(0.5) ? ia.jitter_s : -ia.jitter_s;
        }
        ts += std::max<std::int64_t>(0, gap);
      }
      std::int64_t amount = 0;
      switch (am.type) {
        case AmountModel::Type::Fixed:
          amount = am.values.front();
          break;
        case AmountModel::Type::SmallRoundSet:
          amount = am.values[rng_.below(am.values.size())];
          break;
        case AmountModel::Type::Varied:
          amount = i < am.values.size() ? am.values[i] : rng_.between(am.lo, am.hi);
          break;
      }
      const auto label = rng_.bernoulli(config_.fraud_label_fraction)
                             ? FraudLabel::Fraud
                             : FraudLabel::Unknown;
      txns_.push_back(
          {card, merchants[rng_.below(merchants.size())], amount, ts, label});
    }
  }

  const SynthConfig& config_;
  SplitMix64 rng_;
  std::array<double, 24> hour_cdf_{};
  std::vector<double> merchant_cdf_;
  std::vector<RawTxn> txns_;
  std::vector<CardKind> kinds_;
};

}  // namespace

void validate(const SynthConfig& config) {
  if (config.n_merchants == 0) invalid("n_merchants must be positive");
  if (config.n_days == 0) invalid("n_days must be positive");
  if (config.fraud_label_fraction < 0.0 || config.fraud_label_fraction > 1.0) {
    invalid("fraud_label_fraction must be in [0,1]");
  }
  if (config.honest_label_fraction < 0.0 || config.honest_label_fraction > 1.0) {
    invalid("honest_label_fraction must be in [0,1]");
  }
  const HonestModel& h = config.honest;
  if (h.max_txns == 0) invalid("honest.max_txns must be positive");
  if (h.amount_lo < 0 || h.amount_lo > h.amount_hi) {
    invalid("honest amount range must satisfy 0 <= lo <= hi");
  }
  if (h.log_sigma < 0.0 || h.amount_log_sigma < 0.0) {
    invalid("honest sigmas must be non-negative");
  }
  if (h.favorite_merchants == 0) invalid("honest.favorite_merchants must be positive");
  for (const ArchetypeSpec& a : config.archetypes) {
    validate_archetype(a, config.n_merchants);
  }
}

SynthResult generate(const SynthConfig& config) {
  validate(config);
  Generator gen(config, config.seed);
  gen.add_archetypes();
  for (std::size_t c = 0; c < config.n_honest_cards; ++c) {
    gen.add_honest_card(config.honest.max_txns);
  }
  return gen.finish();
}

std::vector<SynthResult> scale_series(const SynthConfig& config,
                                      std::span<const std::size_t> sizes,
                                      std::uint64_t seed) {
  validate(config);
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    invalid("sizes must be ascending");
  }
  std::vector<SynthResult> out;
  out.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    Generator gen(config, derive_seed(seed, i));
    gen.add_archetypes();
    if (gen.n_txns() > sizes[i]) {
      invalid("size " + std::to_string(sizes[i]) +
              " is smaller than the injected archetype txns");
    }
    while (gen.n_txns() < sizes[i]) {
      gen.add_honest_card(sizes[i] - gen.n_txns());
    }
    out.push_back(gen.finish());
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::int64_t> parse_int_list(const std::string& key,
                                         const std::string& value) {
  std::vector<std::int64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = csv::parse_int<std::int64_t>(trim(item));
    if (!v) invalid(key + ": expected integer list, got '" + value + "'");
    out.push_back(*v);
  }
  return out;
}

std::int64_t parse_clock(const std::string& key, const std::string& s) {
  const auto colon = s.find(':');
  const auto h = csv::parse_int<std::int64_t>(s.substr(0, colon));
  std::optional<std::int64_t> m = std::int64_t{0};
  if (colon != std::string::npos) m = csv::parse_int<std::int64_t>(s.substr(colon + 1));
  if (!h || !m || *h < 0 || *h > 24 || *m < 0 || *m > 59) {
    invalid(key + ": expected HH:MM, got '" + s + "'");
  }
  return *h * 3600 + *m * 60;
}

ArchetypeSpec& archetype_slot(SynthConfig& config, CardKind kind) {
  for (ArchetypeSpec& a : config.archetypes) {
    if (a.kind == kind) return a;
  }
  switch (kind) {
    case CardKind::DoubleMachineGun:
      config.archetypes.push_back(ArchetypeSpec::double_machine_gun(0));
      break;
    case CardKind::PennyHunter:
      config.archetypes.push_back(ArchetypeSpec::penny_hunter(0));
      break;
    default:
      config.archetypes.push_back(ArchetypeSpec::bursty_poster(0));
      break;
  }
  return config.archetypes.back();
}

}  // namespace

SynthConfig parse_synth_config(std::istream& in) {
  SynthConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      invalid("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto as_uint = [&]() -> std::size_t {
      const auto v = csv::parse_int<std::size_t>(value);
      if (!v) invalid(key + ": expected non-negative integer, got '" + value + "'");
      return *v;
    };
    const auto as_int = [&]() -> std::int64_t {
      const auto v = csv::parse_int<std::int64_t>(value);
      if (!v) invalid(key + ": expected integer, got '" + value + "'");
      return *v;
    };
    const auto as_double = [&]() -> double {
      const auto v = csv::parse_double(value);
      if (!v) invalid(key + ": expected number, got '" + value + "'");
      return *v;
    };

    if (key == "seed") {
      config.seed = as_uint();
    } else if (key == "n_honest_cards") {
      config.n_honest_cards = as_uint();
    } else if (key == "n_merchants") {
      config.n_merchants = as_uint();
    } else if (key == "n_days") {
      config.n_days = as_uint();
    } else if (key == "start_timestamp") {
      config.start_timestamp = as_int();
    } else if (key == "fraud_label_fraction") {
      config.fraud_label_fraction = as_double();
    } else if (key == "honest_label_fraction") {
      config.honest_label_fraction = as_double();
    } else if (key == "honest.log_mean") {
      config.honest.log_mean = as_double();
    } else if (key == "honest.log_sigma") {
      config.honest.log_sigma = as_double();
    } else if (key == "honest.max_txns") {
      config.honest.max_txns = as_uint();
    } else if (key == "honest.amount_lo") {
      config.honest.amount_lo = as_int();
    } else if (key == "honest.amount_hi") {
      config.honest.amount_hi = as_int();
    } else if (key == "honest.amount_log_median") {
      config.honest.amount_log_median = as_double();
    } else if (key == "honest.amount_log_sigma") {
      config.honest.amount_log_sigma = as_double();
    } else if (key == "honest.favorite_merchants") {
      config.honest.favorite_merchants = as_uint();
    } else if (const auto dot = key.find('.'); dot != std::string::npos) {
      const std::string prefix = key.substr(0, dot);
      const std::string field = key.substr(dot + 1);
      CardKind kind;
      if (prefix == "dmg") {
        kind = CardKind::DoubleMachineGun;
      } else if (prefix == "ph") {
        kind = CardKind::PennyHunter;
      } else if (prefix == "bp") {
        kind = CardKind::BurstyPoster;
      } else {
        invalid("unknown key '" + key + "'");
      }
      ArchetypeSpec& a = archetype_slot(config, kind);
      if (field == "n_cards") {
        a.n_cards = as_uint();
      } else if (field == "txns") {
        const auto r = parse_int_list(key, value);
        if (r.size() == 1) {
          a.txns_min = a.txns_max = static_cast<std::size_t>(r[0]);
        } else if (r.size() == 2) {
          a.txns_min = static_cast<std::size_t>(r[0]);
          a.txns_max = static_cast<std::size_t>(r[1]);
        } else {
          invalid(key + ": expected n or min,max");
        }
      } else if (field == "iat_base") {
        a.inter_arrival.base_s = as_int();
      } else if (field == "iat_jitter") {
        a.inter_arrival.jitter_s = as_int();
      } else if (field == "iat_jitter_prob") {
        a.inter_arrival.jitter_prob = as_double();
      } else if (field == "fixed_amount") {
        a.amount_model = AmountModel::fixed(as_int());
      } else if (field == "round_set") {
        a.amount_model = AmountModel::small_round_set(parse_int_list(key, value));
      } else if (field == "varied_range") {
        const auto r = parse_int_list(key, value);
        if (r.size() != 2) invalid(key + ": expected lo,hi");
        a.amount_model = AmountModel::varied(r[0], r[1], a.amount_model.type ==
                                                                 AmountModel::Type::Varied
                                                             ? a.amount_model.values
                                                             : std::vector<std::int64_t>{});
      } else if (field == "pinned_amounts") {
        if (a.amount_model.type != AmountModel::Type::Varied) {
          invalid(key + ": pinned amounts need a varied amount model");
        }
        a.amount_model.values = parse_int_list(key, value);
      } else if (field == "window") {
        const auto dash = value.find('-');
        if (dash == std::string::npos) invalid(key + ": expected HH:MM-HH:MM");
        a.time_of_day_window = ClockWindow{parse_clock(key, trim(value.substr(0, dash))),
                                           parse_clock(key, trim(value.substr(dash + 1)))};
      } else if (field == "fanout") {
        a.merchant_fanout = as_uint();
      } else {
        invalid("unknown key '" + key + "'");
      }
    } else {
      invalid("unknown key '" + key + "'");
    }
  }
  std::erase_if(config.archetypes,
                [](const ArchetypeSpec& a) { return a.n_cards == 0; });
  return config;
}

SynthConfig parse_synth_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  return parse_synth_config(in);
}

void write_ground_truth(const std::map<std::string, CardKind>& truth,
                        std::ostream& out) {
  out << "card_id,kind\n";
  for (const auto& [card, kind] : truth) out << card << ',' << to_string(kind) << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed");
}

std::map<std::string, CardKind> read_ground_truth(std::istream& in) {
  std::map<std::string, CardKind> truth;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorKind::MalformedRow, "ground truth: '" + line + "'");
    }
    truth.emplace(line.substr(0, comma), card_kind_from_string(line.substr(comma + 1)));
  }
  return truth;
}

}  // namespace fraudlens
