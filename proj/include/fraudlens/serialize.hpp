#pragma once

#include <json.hpp>

#include "fraudlens/dashboard.hpp"
#include "fraudlens/features.hpp"
#include "fraudlens/graph.hpp"
#include "fraudlens/heatmap.hpp"

namespace fraudlens {

using Json = nlohmann::ordered_json;

// Key order is fixed by construction so documents are byte-stable.

Json to_json(const CardFeatures& f);
Json to_json(const HeatmapGrid& grid);
Json to_json(const Ellipse& e);
Json to_json(const EgonetView& view);
Json to_json(const TemporalBins& bins);
Json to_json(const SpreadsheetRow& row);
Json to_json(const DashboardPayload& payload);

/// Reads {center_x, center_y, semi_x, semi_y, angle}; angle defaults to 0.
/// Throws Error{InvalidParams} on missing or non-numeric fields.
Ellipse ellipse_from_json(const Json& j);

}  // namespace fraudlens
