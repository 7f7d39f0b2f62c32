#include "fraudlens/serialize.hpp"

#include "fraudlens/error.hpp"

namespace fraudlens {

Json to_json(const CardFeatures& f) {
  return Json{{"card_id", f.card_id},
              {"n_txns", f.n_txns},
              {"n_distinct_iat", f.n_distinct_iat},
              {"n_distinct_amounts", f.n_distinct_amounts},
              {"median_amount_cents", f.median_amount_cents},
              {"median_iat_s", f.median_iat_s},
              {"variance_iat_s2", f.variance_iat_s2},
              {"variance_amount", f.variance_amount},
              {"n_merchants", f.n_merchants},
              {"fraction_night", f.fraction_night}};
}

Json to_json(const HeatmapGrid& grid) {
  return Json{{"x_feature", grid.x_feature},
              {"y_feature", grid.y_feature},
              {"transform", "log10(1+v)"},
              {"n_bins_x", grid.n_bins_x},
              {"n_bins_y", grid.n_bins_y},
              {"x_edges", grid.x_edges},
              {"y_edges", grid.y_edges},
              {"counts", grid.counts},
              {"total_cards", grid.total_cards}};
}

Json to_json(const Ellipse& e) {
  return Json{{"center_x", e.center_x},
              {"center_y", e.center_y},
              {"semi_x", e.semi_x},
              {"semi_y", e.semi_y},
              {"angle", e.angle}};
}

Json to_json(const EgonetView& view) {
  Json nodes = Json::array();
  for (const EgonetNode& n : view.nodes) {
    nodes.push_back({{"role", to_string(n.role)},
                     {"id", n.id},
                     {"n_txns", n.n_txns},
                     {"n_counterparties", n.n_counterparties},
                     {"n_fraud_txns", n.n_fraud_txns},
                     {"core_number", n.core_number},
                     {"in_main_core", n.in_main_core},
                     {"is_target", n.is_target}});
  }
  Json edges = Json::array();
  for (const EgonetEdge& e : view.edges) {
    edges.push_back({{"card", e.card},
                     {"merchant", e.merchant},
                     {"txn_count", e.txn_count},
                     {"fraud_count", e.fraud_count},
                     {"display_width", e.display_width}});
  }
  return Json{{"target_card", view.target_card},
              {"core_k", view.core_k},
              {"egonet_nodes", view.egonet_nodes},
              {"egonet_edges", view.egonet_edges},
              {"nodes", std::move(nodes)},
              {"edges", std::move(edges)}};
}

Json to_json(const TemporalBins& bins) {
  Json target = Json::array();
  for (const TemporalBin& b : bins.bins) {
    target.push_back({{"bin_start", b.bin_start},
                      {"txn_count", b.txn_count},
                      {"total_amount_cents", b.total_amount_cents}});
  }
  Json background = Json::array();
  for (const BackgroundBin& b : bins.background) {
    background.push_back({{"bin_start", b.bin_start},
                          {"norm_count", b.norm_count},
                          {"norm_amount", b.norm_amount}});
  }
  return Json{{"bin_length_min", bins.bin_length_min},
              {"count_scale", bins.count_scale},
              {"amount_scale", bins.amount_scale},
              {"bins", std::move(target)},
              {"background", std::move(background)}};
}

Json to_json(const SpreadsheetRow& row) {
  return Json{{"merchant", row.merchant},
              {"amount_cents", row.amount_cents},
              {"timestamp", row.timestamp},
              {"iat_s", row.iat_s ? Json(*row.iat_s) : Json(nullptr)},
              {"suspicion_counts", row.suspicion_counts},
              {"fraud_label", to_string(row.fraud_label)},
              {"highlight",
               {{"repeated_merchant", row.repeated_merchant},
                {"repeated_amount", row.repeated_amount},
                {"repeated_iat", row.repeated_iat},
                {"nonzero_suspicion", row.nonzero_suspicion},
                {"confirmed_fraud", row.confirmed_fraud}}}};
}

Json to_json(const DashboardPayload& payload) {
  Json points = Json::array();
  for (const IatPoint& p : payload.iat_points) {
    points.push_back({p.dt_before_s, p.dt_after_s});
  }
  Json rows = Json::array();
  for (const SpreadsheetRow& r : payload.spreadsheet) rows.push_back(to_json(r));
  return Json{{"card_id", payload.card_id},
              {"assigned_class", to_string(payload.assigned_class)},
              {"features", to_json(payload.features)},
              {"egonet", to_json(payload.egonet)},
              {"iat_points", std::move(points)},
              {"iat_background", to_json(payload.iat_background)},
              {"spreadsheet", std::move(rows)},
              {"temporal_fine", to_json(payload.temporal_fine)},
              {"temporal_coarse", to_json(payload.temporal_coarse)}};
}

Ellipse ellipse_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidParams, "ellipse must be an object");
  const auto number = [&](const char* key, bool required, double fallback) {
    const auto it = j.find(key);
    if (it == j.end()) {
      if (required) {
        throw Error(ErrorKind::InvalidParams, std::string("ellipse missing '") + key + "'");
      }
      return fallback;
    }
    if (!it->is_number()) {
      throw Error(ErrorKind::InvalidParams, std::string("ellipse '") + key + "' not a number");
    }
    return it->get<double>();
  };
  Ellipse e;
  e.center_x = number("center_x", true, 0.0);
  e.center_y = number("center_y", true, 0.0);
  e.semi_x = number("semi_x", true, 0.0);
  e.semi_y = number("semi_y", true, 0.0);
  e.angle = number("angle", false, 0.0);
  validate(e);
  return e;
}

}  // namespace fraudlens
