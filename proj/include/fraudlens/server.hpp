#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlens/dashboard.hpp"
#include "fraudlens/features.hpp"
#include "fraudlens/graph.hpp"
#include "fraudlens/heatmap.hpp"
#include "fraudlens/ingest.hpp"
#include "fraudlens/serialize.hpp"

namespace fraudlens {

struct SessionOptions {
  FlagParams flags;
  std::size_t heatmap_bins = 64;
  std::size_t member_preview = 20;
};

struct MarkedRegion {
  Region region;
  std::string x_feature;
  std::string y_feature;
  CardSet members;
  std::string label;  // empty until assigned
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

/// One dataset plus everything derived from it. Construction runs the
/// linear preprocessing (features, graph, dashboard aggregates, automatic
/// flags). Reads may run concurrently; region marking and labeling
/// serialize through a single writer.
class Session {
 public:
  explicit Session(Dataset d, SessionOptions options = {});

  const Dataset& dataset() const noexcept { return dataset_; }
  const FeatureTable& features() const noexcept { return features_; }
  const BipartiteGraph& graph() const noexcept { return graph_; }
  const std::map<std::string, CardClass>& auto_classes() const noexcept {
    return auto_classes_;
  }

  Json health() const;
  Json features_json() const;
  /// Throws Error{UnknownFeature | InvalidParams}.
  Json heatmap_json(std::string_view x, std::string_view y, std::size_t bins) const;
  /// The six pairwise grids over the default scoring features.
  Json all_heatmaps_json(std::size_t bins) const;
  Json classes_json() const;
  /// Throws Error{UnknownCard}.
  Json dashboard_json(std::string_view card) const;
  Json egonet_json(std::string_view card) const;

  /// Stores the region under the next id ("r1", "r2", ...). Response holds
  /// the id, member count and the first `member_preview` members.
  Json mark_region(std::string_view x, std::string_view y, const Ellipse& shape,
                   RegionOrigin origin = RegionOrigin::User);
  /// Labels every member; the most recent assignment wins on overlaps. The
  /// response lists the cards whose user label changed. Throws
  /// Error{UnknownRegion}.
  Json assign_label(std::string_view region_id, std::string_view label);

  /// Routes one request. Library errors map to 400/404 bodies of the form
  /// {"error": kind, "message": text}.
  HttpResponse handle(std::string_view method, std::string_view path,
                      const std::multimap<std::string, std::string>& query,
                      std::string_view body);

 private:
  HttpResponse route(std::string_view method, std::string_view path,
                     const std::multimap<std::string, std::string>& query,
                     std::string_view body);

  Dataset dataset_;
  SessionOptions options_;
  CardIndex card_index_;
  FeatureTable features_;
  BipartiteGraph graph_;
  DashboardIndex dashboard_index_;
  std::map<std::string, CardClass> auto_classes_;

  mutable std::shared_mutex mutex_;
  std::vector<MarkedRegion> regions_;
  std::map<std::string, std::string> user_labels_;
};

/// Blocks serving `session` over HTTP until the process stops. Throws
/// Error{IoFailure} when the address cannot be bound.
void serve(Session& session, const std::string& host, int port);

}  // namespace fraudlens
