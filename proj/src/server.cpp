#include "fraudlens/server.hpp"

#include <charconv>
#include <mutex>

#include <httplib.h>

#include "fraudlens/anomaly.hpp"
#include "fraudlens/error.hpp"

namespace fraudlens {

namespace {

std::string_view region_origin_name(RegionOrigin o) {
  return o == RegionOrigin::User ? "user" : "auto";
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t j = std::min(path.find('/', i), path.size());
    parts.push_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

const std::string* query_value(const std::multimap<std::string, std::string>& q,
                               const std::string& key) {
  const auto it = q.find(key);
  return it == q.end() ? nullptr : &it->second;
}

std::size_t parse_bins(const std::string* text, std::size_t fallback) {
  if (text == nullptr) return fallback;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc() || ptr != text->data() + text->size()) {
    throw Error(ErrorKind::InvalidParams, "bins must be a positive integer, got '" + *text + "'");
  }
  return v;
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownCard:
    case ErrorKind::UnknownRegion:
      return 404;
    case ErrorKind::IoFailure:
      return 500;
    default:
      return 400;
  }
}

HttpResponse error_response(int status, std::string_view kind, std::string_view message) {
  return {status, Json{{"error", kind}, {"message", message}}.dump()};
}

HttpResponse ok(const Json& j) { return {200, j.dump()}; }

}  // namespace

Session::Session(Dataset d, SessionOptions options)
    : dataset_(std::move(d)),
      options_(options),
      card_index_(build_card_index(dataset_)),
      features_(extract_features(dataset_, card_index_)),
      graph_(build_graph(dataset_)),
      dashboard_index_(dataset_, card_index_) {
  validate(options_.flags);
  auto_classes_ = detect(features_, options_.flags);
}

Json Session::health() const {
  return Json{{"status", "ok"},
              {"n_txns", dataset_.size()},
              {"n_cards", dataset_.n_cards()},
              {"n_merchants", dataset_.n_merchants()},
              {"time_window",
               {{"start", dataset_.time_window().start},
                {"end", dataset_.time_window().end}}}};
}

Json Session::features_json() const {
  Json rows = Json::array();
  for (const CardFeatures& f : features_.rows()) rows.push_back(to_json(f));
  Json names = Json::array();
  for (const std::string_view n : kFeatureNames) names.push_back(n);
  return Json{{"feature_names", std::move(names)}, {"cards", std::move(rows)}};
}

Json Session::heatmap_json(std::string_view x, std::string_view y, std::size_t bins) const {
  return to_json(build_heatmap(features_, x, y, bins));
}

Json Session::all_heatmaps_json(std::size_t bins) const {
  Json grids = Json::array();
  const auto& names = kDefaultScoringFeatures;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      grids.push_back(heatmap_json(names[i], names[j], bins));
    }
  }
  return Json{{"grids", std::move(grids)}};
}

Json Session::classes_json() const {
  std::shared_lock lock(mutex_);
  Json auto_class = Json::object();
  for (const auto& [card, cls] : auto_classes_) {
    if (cls != CardClass::Unlabeled) auto_class[card] = to_string(cls);
  }
  Json user_label = Json::object();
  for (const auto& [card, label] : user_labels_) user_label[card] = label;
  Json regions = Json::array();
  for (const MarkedRegion& r : regions_) {
    regions.push_back({{"region_id", r.region.region_id},
                       {"x", r.x_feature},
                       {"y", r.y_feature},
                       {"ellipse", to_json(r.region.shape)},
                       {"created_by", region_origin_name(r.region.created_by)},
                       {"member_count", r.members.size()},
                       {"label", r.label}});
  }
  return Json{{"auto_class", std::move(auto_class)},
              {"user_label", std::move(user_label)},
              {"regions", std::move(regions)}};
}

Json Session::dashboard_json(std::string_view card) const {
  const DashboardPayload payload = assemble_dashboard(
      dataset_, card_index_, features_, graph_, auto_classes_, dashboard_index_, card);
  Json j = to_json(payload);
  std::shared_lock lock(mutex_);
  const auto it = user_labels_.find(payload.card_id);
  j["user_label"] = it == user_labels_.end() ? Json(nullptr) : Json(it->second);
  return j;
}

Json Session::egonet_json(std::string_view card) const {
  return to_json(egonet_view(graph_, card));
}

Json Session::mark_region(std::string_view x, std::string_view y, const Ellipse& shape,
                          RegionOrigin origin) {
  if (!is_feature(x)) throw Error(ErrorKind::UnknownFeature, "'" + std::string(x) + "'");
  if (!is_feature(y)) throw Error(ErrorKind::UnknownFeature, "'" + std::string(y) + "'");
  validate(shape);
  std::unique_lock lock(mutex_);
  MarkedRegion r;
  r.region = {"r" + std::to_string(regions_.size() + 1), shape, origin};
  r.x_feature = std::string(x);
  r.y_feature = std::string(y);
  r.members = cards_in_region(features_, r.region, x, y);
  Json preview = Json::array();
  for (const std::string& card : r.members) {
    if (preview.size() >= options_.member_preview) break;
    preview.push_back(card);
  }
  Json out{{"region_id", r.region.region_id},
           {"member_count", r.members.size()},
           {"members_preview", std::move(preview)}};
  regions_.push_back(std::move(r));
  return out;
}

Json Session::assign_label(std::string_view region_id, std::string_view label) {
  std::unique_lock lock(mutex_);
  MarkedRegion* region = nullptr;
  for (MarkedRegion& r : regions_) {
    if (r.region.region_id == region_id) region = &r;
  }
  if (region == nullptr) {
    throw Error(ErrorKind::UnknownRegion, "'" + std::string(region_id) + "'");
  }
  region->label = std::string(label);
  Json delta = Json::object();
  for (const std::string& card : region->members) {
    std::string& current = user_labels_[card];
    if (current != label) {
      current = std::string(label);
      delta[card] = current;
    }
  }
  return Json{{"region_id", region->region.region_id},
              {"label", region->label},
              {"delta", std::move(delta)}};
}

HttpResponse Session::route(std::string_view method, std::string_view path,
                            const std::multimap<std::string, std::string>& query,
                            std::string_view body) {
  const std::vector<std::string_view> parts = split_path(path);
  const bool get = method == "GET";
  const bool post = method == "POST";

  if (parts.size() == 1 && parts[0] == "health" && get) return ok(health());
  if (parts.size() == 1 && parts[0] == "features" && get) return ok(features_json());
  if (parts.size() == 1 && parts[0] == "classes" && get) return ok(classes_json());
  if (parts.size() == 1 && parts[0] == "heatmaps" && get) {
    const std::size_t bins = parse_bins(query_value(query, "bins"), options_.heatmap_bins);
    const std::string* x = query_value(query, "x");
    const std::string* y = query_value(query, "y");
    if (x == nullptr && y == nullptr) return ok(all_heatmaps_json(bins));
    if (x == nullptr || y == nullptr) {
      throw Error(ErrorKind::InvalidParams, "give both x and y, or neither");
    }
    return ok(heatmap_json(*x, *y, bins));
  }
  if (parts.size() == 3 && parts[0] == "cards" && get) {
    if (parts[2] == "dashboard") return ok(dashboard_json(parts[1]));
    if (parts[2] == "egonet") return ok(egonet_json(parts[1]));
  }
  if (parts.size() == 1 && parts[0] == "regions" && post) {
    const Json req = Json::parse(body);
    if (!req.is_object() || !req.contains("x") || !req.contains("y") ||
        !req["x"].is_string() || !req["y"].is_string() || !req.contains("ellipse")) {
      throw Error(ErrorKind::InvalidParams,
                  "body needs string fields x, y and an ellipse object");
    }
    RegionOrigin origin = RegionOrigin::User;
    if (req.contains("created_by")) {
      const std::string by = req["created_by"].get<std::string>();
      if (by == "auto") {
        origin = RegionOrigin::Auto;
      } else if (by != "user") {
        throw Error(ErrorKind::InvalidParams, "created_by must be 'user' or 'auto'");
      }
    }
    return ok(mark_region(req["x"].get<std::string>(), req["y"].get<std::string>(),
                          ellipse_from_json(req["ellipse"]), origin));
  }
  if (parts.size() == 3 && parts[0] == "regions" && parts[2] == "label" && post) {
    const Json req = Json::parse(body);
    if (!req.is_object() || !req.contains("label") || !req["label"].is_string()) {
      throw Error(ErrorKind::InvalidParams, "body needs a string field label");
    }
    return ok(assign_label(parts[1], req["label"].get<std::string>()));
  }
  return error_response(404, "NotFound",
                        std::string(method) + " " + std::string(path) + " is not a route");
}

HttpResponse Session::handle(std::string_view method, std::string_view path,
                             const std::multimap<std::string, std::string>& query,
                             std::string_view body) {
  try {
    return route(method, path, query, body);
  } catch (const Error& e) {
    const std::string_view kind = to_string(e.kind());
    std::string_view message = e.what();
    if (message.size() > kind.size() + 2) message.remove_prefix(kind.size() + 2);
    return error_response(status_for(e.kind()), kind, message);
  } catch (const Json::exception& e) {
    return error_response(400, "InvalidJson", e.what());
  }
}

void serve(Session& session, const std::string& host, int port) {
  httplib::Server server;
  const auto dispatch = [&session](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = session.handle(req.method, req.path, req.params, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get(".*", dispatch);
  server.Post(".*", dispatch);
  if (!server.bind_to_port(host, port)) {
    throw Error(ErrorKind::IoFailure,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  server.listen_after_bind();
}

}  // namespace fraudlens
