#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlens/features.hpp"

namespace fraudlens {

/// Maps a raw feature value onto heatmap axis space; keeps 0 in-domain.
inline double axis_transform(double v) { return std::log10(1.0 + v); }

/// 2-D density of points over u = log10(1 + v) on both axes. Bins are
/// half-open [edge_i, edge_{i+1}) except the last, which includes its upper
/// edge; edges start at 0 and span to the largest transformed value.
struct HeatmapGrid {
  std::string x_feature;
  std::string y_feature;
  std::size_t n_bins_x = 0;
  std::size_t n_bins_y = 0;
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<std::uint64_t> counts;  // row-major: counts[ix * n_bins_y + iy]
  std::uint64_t total_cards = 0;

  std::uint64_t at(std::size_t ix, std::size_t iy) const {
    return counts[ix * n_bins_y + iy];
  }
  bool operator==(const HeatmapGrid&) const = default;
};

/// Empty grid with edges spanning [0, max_u] per axis (upper edge 1 when the
/// axis maximum is 0, so edges stay strictly increasing).
HeatmapGrid make_grid(std::string x_feature, std::string y_feature,
                      std::size_t n_bins, double max_ux, double max_uy);

std::size_t bin_of(std::span<const double> edges, double u);

/// Adds `weight` (may be negative for removal) at raw values (vx, vy).
void accumulate(HeatmapGrid& grid, double vx, double vy, std::int64_t weight = 1);

HeatmapGrid build_heatmap(const FeatureTable& table, std::string_view x,
                          std::string_view y, std::size_t n_bins = 64);

/// Ellipse in transformed (u_x, u_y) space; `angle` rotates the semi-axis
/// `semi_x` away from the u_x axis, counter-clockwise, in radians.
struct Ellipse {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_x = 1.0;
  double semi_y = 1.0;
  double angle = 0.0;

  /// Boundary points count as inside.
  bool contains(double ux, double uy) const;
};

enum class RegionOrigin { User, Auto };

struct Region {
  std::string region_id;
  Ellipse shape;
  RegionOrigin created_by = RegionOrigin::User;
};

/// Throws Error{InvalidParams} unless both semi-axes are positive and finite.
void validate(const Ellipse& e);

using CardSet = std::set<std::string>;

CardSet cards_in_region(const FeatureTable& table, const Region& region,
                        std::string_view x, std::string_view y);

/// Automatic flag thresholds. A card needs at least tau_n txns for any flag.
struct FlagParams {
  std::int64_t tau_n = 10;
  std::int64_t tau_iat = 3;
  double rho_iat = 0.2;
  std::int64_t tau_amt = 3;
  double rho_amt = 0.2;
  std::int64_t tau_median_cents = 500;
};

void validate(const FlagParams& p);
FlagParams parse_flag_params(std::istream& in);
FlagParams parse_flag_params_file(const std::string& path);

/// Many txns, few distinct inter-arrival times.
CardSet flag_mg_t(const FeatureTable& table, const FlagParams& p = {});
/// Many txns, few distinct amounts.
CardSet flag_mg_dollar(const FeatureTable& table, const FlagParams& p = {});
/// Many txns, small median amount.
CardSet flag_small_dollar(const FeatureTable& table, const FlagParams& p = {});

enum class CardClass { Unlabeled, DoubleMachineGun, PennyHunter, BurstyPoster };

std::string_view to_string(CardClass c);

/// Venn classification, covering every card in the union of the three sets.
///   DoubleMachineGun = mg_t & mg_d
///   PennyHunter      = (mg_t & small_d) - mg_d
///   BurstyPoster     = mg_t - (mg_d | small_d)
/// Everything else is Unlabeled.
std::map<std::string, CardClass> classify_cards(const CardSet& mg_t,
                                                const CardSet& mg_d,
                                                const CardSet& small_d);

/// Flags + classification for every card in the table (Unlabeled included).
std::map<std::string, CardClass> detect(const FeatureTable& table,
                                        const FlagParams& p = {});

}  // namespace fraudlens
