#include "fraudlens/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "csv.hpp"
#include "fraudlens/error.hpp"

namespace fraudlens {

namespace {

std::vector<double> make_edges(std::size_t n_bins, double max_u) {
  const double hi = max_u > 0.0 ? max_u : 1.0;
  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    edges[i] = hi * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  edges.back() = hi;
  return edges;
}

void require_feature(std::string_view name) {
  if (!is_feature(name)) {
    throw Error(ErrorKind::UnknownFeature, "'" + std::string(name) + "'");
  }
}

}  // namespace

HeatmapGrid make_grid(std::string x_feature, std::string y_feature,
                      std::size_t n_bins, double max_ux, double max_uy) {
  if (n_bins < 2) throw Error(ErrorKind::InvalidParams, "n_bins must be >= 2");
  HeatmapGrid g;
  g.x_feature = std::move(x_feature);
  g.y_feature = std::move(y_feature);
  g.n_bins_x = g.n_bins_y = n_bins;
  g.x_edges = make_edges(n_bins, max_ux);
  g.y_edges = make_edges(n_bins, max_uy);
  g.counts.assign(n_bins * n_bins, 0);
  return g;
}

std::size_t bin_of(std::span<const double> edges, double u) {
  const std::size_t n_bins = edges.size() - 1;
  if (u <= edges.front()) return 0;
  // First edge strictly greater than u, minus one.
  const auto it = std::upper_bound(edges.begin(), edges.end(), u);
  const auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(bin, n_bins - 1);
}

void accumulate(HeatmapGrid& grid, double vx, double vy, std::int64_t weight) {
  const std::size_t ix = bin_of(grid.x_edges, axis_transform(vx));
  const std::size_t iy = bin_of(grid.y_edges, axis_transform(vy));
  auto& cell = grid.counts[ix * grid.n_bins_y + iy];
  cell = static_cast<std::uint64_t>(static_cast<std::int64_t>(cell) + weight);
  grid.total_cards =
      static_cast<std::uint64_t>(static_cast<std::int64_t>(grid.total_cards) + weight);
}

HeatmapGrid build_heatmap(const FeatureTable& table, std::string_view x,
                          std::string_view y, std::size_t n_bins) {
  require_feature(x);
  require_feature(y);
  if (x == y) throw Error(ErrorKind::InvalidParams, "x and y features must differ");
  const std::vector<double> xs = table.column(x);
  const std::vector<double> ys = table.column(y);
  double max_x = 0.0, max_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    max_x = std::max(max_x, xs[i]);
    max_y = std::max(max_y, ys[i]);
  }
  HeatmapGrid grid = make_grid(std::string(x), std::string(y), n_bins,
                               axis_transform(max_x), axis_transform(max_y));
  for (std::size_t i = 0; i < xs.size(); ++i) accumulate(grid, xs[i], ys[i]);
  return grid;
}

bool Ellipse::contains(double ux, double uy) const {
  const double dx = ux - center_x;
  const double dy = uy - center_y;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double along = (dx * c + dy * s) / semi_x;
  const double across = (-dx * s + dy * c) / semi_y;
  // Tolerance absorbs rounding in the rotation so boundary points stay in.
  return along * along + across * across <= 1.0 + 1e-12;
}

void validate(const Ellipse& e) {
  if (!(e.semi_x > 0.0) || !(e.semi_y > 0.0) || !std::isfinite(e.semi_x) ||
      !std::isfinite(e.semi_y) || !std::isfinite(e.center_x) ||
      !std::isfinite(e.center_y) || !std::isfinite(e.angle)) {
    throw Error(ErrorKind::InvalidParams, "ellipse semi-axes must be positive and finite");
  }
}

CardSet cards_in_region(const FeatureTable& table, const Region& region,
                        std::string_view x, std::string_view y) {
  require_feature(x);
  require_feature(y);
  validate(region.shape);
  CardSet members;
  for (const CardFeatures& f : table.rows()) {
    if (region.shape.contains(axis_transform(feature_value(f, x)),
                              axis_transform(feature_value(f, y)))) {
      members.insert(f.card_id);
    }
  }
  return members;
}

void validate(const FlagParams& p) {
  if (p.tau_n <= 0 || p.tau_iat <= 0 || p.tau_amt <= 0 || p.tau_median_cents <= 0) {
    throw Error(ErrorKind::InvalidParams, "flag thresholds must be positive");
  }
  for (const double rho : {p.rho_iat, p.rho_amt}) {
    if (!(rho > 0.0 && rho <= 1.0)) {
      throw Error(ErrorKind::InvalidParams, "flag ratios must lie in (0, 1]");
    }
  }
}

FlagParams parse_flag_params(std::istream& in) {
  FlagParams p;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidParams, "expected key = value: '" + line + "'");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto num = csv::parse_double(value);
    if (!num) throw Error(ErrorKind::InvalidParams, key + ": bad number '" + value + "'");
    const auto as_int = [&] { return static_cast<std::int64_t>(*num); };
    if (key == "tau_n") {
      p.tau_n = as_int();
    } else if (key == "tau_iat") {
      p.tau_iat = as_int();
    } else if (key == "rho_iat") {
      p.rho_iat = *num;
    } else if (key == "tau_amt") {
      p.tau_amt = as_int();
    } else if (key == "rho_amt") {
      p.rho_amt = *num;
    } else if (key == "tau_median_cents") {
      p.tau_median_cents = as_int();
    } else {
      throw Error(ErrorKind::InvalidParams, "unknown flag parameter '" + key + "'");
    }
  }
  validate(p);
  return p;
}

FlagParams parse_flag_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  return parse_flag_params(in);
}

namespace {

bool few_distinct(std::int64_t distinct, std::int64_t n_txns, std::int64_t tau,
                  double rho) {
  return distinct <= tau ||
         static_cast<double>(distinct) <= rho * static_cast<double>(n_txns - 1);
}

template <typename Pred>
CardSet select_cards(const FeatureTable& table, const FlagParams& p, Pred pred) {
  validate(p);
  CardSet out;
  for (const CardFeatures& f : table.rows()) {
    if (f.n_txns >= p.tau_n && pred(f)) out.insert(out.end(), f.card_id);
  }
  return out;
}

}  // namespace

CardSet flag_mg_t(const FeatureTable& table, const FlagParams& p) {
  return select_cards(table, p, [&](const CardFeatures& f) {
    return few_distinct(f.n_distinct_iat, f.n_txns, p.tau_iat, p.rho_iat);
  });
}

CardSet flag_mg_dollar(const FeatureTable& table, const FlagParams& p) {
  return select_cards(table, p, [&](const CardFeatures& f) {
    return few_distinct(f.n_distinct_amounts, f.n_txns, p.tau_amt, p.rho_amt);
  });
}

CardSet flag_small_dollar(const FeatureTable& table, const FlagParams& p) {
  return select_cards(table, p, [&](const CardFeatures& f) {
    return f.median_amount_cents <= p.tau_median_cents;
  });
}

std::string_view to_string(CardClass c) {
  switch (c) {
    case CardClass::DoubleMachineGun:
      return "double_machine_gun";
    case CardClass::PennyHunter:
      return "penny_hunter";
    case CardClass::BurstyPoster:
      return "bursty_poster";
    case CardClass::Unlabeled:
      break;
  }
  return "unlabeled";
}

std::map<std::string, CardClass> classify_cards(const CardSet& mg_t,
                                                const CardSet& mg_d,
                                                const CardSet& small_d) {
  std::map<std::string, CardClass> out;
  for (const CardSet* s : {&mg_t, &mg_d, &small_d}) {
    for (const std::string& card : *s) out.emplace(card, CardClass::Unlabeled);
  }
  for (const std::string& card : mg_t) {
    CardClass& cls = out[card];
    if (mg_d.contains(card)) {
      cls = CardClass::DoubleMachineGun;
    } else if (small_d.contains(card)) {
      cls = CardClass::PennyHunter;
    } else {
      cls = CardClass::BurstyPoster;
    }
  }
  return out;
}

std::map<std::string, CardClass> detect(const FeatureTable& table, const FlagParams& p) {
  std::map<std::string, CardClass> out =
      classify_cards(flag_mg_t(table, p), flag_mg_dollar(table, p),
                     flag_small_dollar(table, p));
  for (const CardFeatures& f : table.rows()) out.emplace(f.card_id, CardClass::Unlabeled);
  return out;
}

}  // namespace fraudlens
