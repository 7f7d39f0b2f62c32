// Python extension: thin wrappers over the core library. Structured payloads
// cross the boundary as the same JSON documents the HTTP service emits.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fraudlens/anomaly.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/features.hpp"
#include "fraudlens/graph.hpp"
#include "fraudlens/heatmap.hpp"
#include "fraudlens/ingest.hpp"
#include "fraudlens/serialize.hpp"
#include "fraudlens/server.hpp"
#include "fraudlens/synth.hpp"

namespace py = pybind11;
namespace fl = fraudlens;
using namespace pybind11::literals;

namespace {

fl::FlagParams flag_params(const std::string& text) {
  if (text.empty()) return {};
  std::istringstream in(text);
  return fl::parse_flag_params(in);
}

std::string features_csv(const fl::FeatureTable& t) {
  std::ostringstream out;
  fl::write_features(t, out);
  return out.str();
}

py::dict feature_columns(const fl::FeatureTable& t) {
  py::dict out;
  std::vector<std::string> ids;
  for (const fl::CardFeatures& f : t.rows()) ids.push_back(f.card_id);
  out["card_id"] = ids;
  for (const std::string_view name : fl::kFeatureNames) {
    out[py::str(std::string(name))] = py::array_t<double>(py::cast(t.column(name)));
  }
  return out;
}

fl::Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) {
    throw fl::Error(fl::ErrorKind::DimensionMismatch, "expected a 2-D array");
  }
  fl::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values.begin());
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lockstep fraud analytics core";

  static py::exception<fl::Error> error(m, "FraudlensError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fl::Error& e) {
      const py::tuple args =
          py::make_tuple(std::string(fl::to_string(e.kind())), std::string(e.what()));
      PyErr_SetObject(error.ptr(), args.ptr());
    }
  });

  py::class_<fl::Dataset>(m, "Dataset")
      .def_static(
          "read_csv", [](const std::string& path) { return fl::parse_transactions_file(path); },
          "path"_a)
      .def_static(
          "from_csv_text",
          [](const std::string& text) {
            std::istringstream in(text);
            return fl::parse_transactions(in);
          },
          "text"_a)
      .def("to_csv_text",
           [](const fl::Dataset& d) {
             std::ostringstream out;
             fl::write_dataset(d, out);
             return out.str();
           })
      .def("write_csv", &fl::write_dataset_file, "path"_a)
      .def("anonymize", &fl::anonymize, "salt"_a)
      .def("__len__", &fl::Dataset::size)
      .def_property_readonly("n_cards", &fl::Dataset::n_cards)
      .def_property_readonly("n_merchants", &fl::Dataset::n_merchants)
      .def_property_readonly("card_ids", &fl::Dataset::card_tokens)
      .def_property_readonly("time_window", [](const fl::Dataset& d) {
        return py::make_tuple(d.time_window().start, d.time_window().end);
      });

  m.def(
      "synthesize",
      [](const std::string& config_text, std::optional<std::uint64_t> seed) {
        std::istringstream in(config_text);
        fl::SynthConfig c = fl::parse_synth_config(in);
        if (seed) c.seed = *seed;
        fl::SynthResult r = fl::generate(c);
        std::map<std::string, std::string> truth;
        for (const auto& [card, kind] : r.ground_truth) truth[card] = std::string(fl::to_string(kind));
        return py::make_tuple(std::move(r.dataset), truth);
      },
      "config_text"_a = "", "seed"_a = py::none(),
      "Generate a labeled dataset from `key = value` config text. Returns (dataset, truth).");

  m.def(
      "extract_features",
      [](const fl::Dataset& d) { return feature_columns(fl::extract_features(d)); }, "dataset"_a,
      "Per-card features as {'card_id': [...], <feature>: ndarray}.");
  m.def(
      "features_csv", [](const fl::Dataset& d) { return features_csv(fl::extract_features(d)); },
      "dataset"_a);
  m.def("feature_names", [] {
    return std::vector<std::string>(fl::kFeatureNames.begin(), fl::kFeatureNames.end());
  });

  m.def(
      "detect",
      [](const fl::Dataset& d, const std::string& params) {
        std::map<std::string, std::string> out;
        for (const auto& [card, cls] : fl::detect(fl::extract_features(d), flag_params(params))) {
          out[card] = std::string(fl::to_string(cls));
        }
        return out;
      },
      "dataset"_a, "params_text"_a = "", "Automatic class for every card.");

  m.def(
      "heatmap_json",
      [](const fl::Dataset& d, const std::string& x, const std::string& y, std::size_t bins) {
        return fl::to_json(fl::build_heatmap(fl::extract_features(d), x, y, bins)).dump();
      },
      "dataset"_a, "x"_a, "y"_a, "bins"_a = 64);

  m.def(
      "core_numbers",
      [](const fl::Dataset& d) {
        const fl::BipartiteGraph g = fl::build_graph(d);
        const auto cores = fl::core_decomposition(g);
        py::dict cards, merchants;
        for (std::uint32_t v = 0; v < g.n_nodes(); ++v) {
          (g.role(v) == fl::NodeRole::Card ? cards : merchants)[py::str(g.token(v))] = cores[v];
        }
        return py::make_tuple(cards, merchants);
      },
      "dataset"_a, "Core numbers of the whole card-merchant graph as (cards, merchants).");

  m.def(
      "isolation_forest_scores",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t n_trees, std::size_t subsample_size, std::uint64_t seed) {
        const fl::Matrix data = to_matrix(x);
        const auto model = fl::IsolationForestModel::fit(data, {n_trees, subsample_size, seed});
        return py::array_t<double>(py::cast(model.score_all(data)));
      },
      "x"_a, "n_trees"_a = 100, "subsample_size"_a = 256, "seed"_a = 0);

  m.def(
      "average_precision",
      [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
        return fl::average_precision(scores, labels);
      },
      "scores"_a, "labels"_a);
  m.def(
      "precision_at_k",
      [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
         std::size_t k) { return fl::precision_at_k(scores, labels, k); },
      "scores"_a, "labels"_a, "k"_a);

  m.def(
      "forward_select",
      [](const std::map<std::string, std::vector<double>>& columns,
         const std::vector<std::uint8_t>& labels, std::size_t max_k, std::uint64_t seed,
         double epsilon) {
        fl::FeatureMatrix fm;
        std::vector<std::string> names;
        for (const auto& [name, values] : columns) {
          fm.add_column(name, values);
          names.push_back(name);
        }
        fl::SelectionOptions o;
        o.forest.seed = seed;
        o.epsilon = epsilon;
        const fl::SelectionResult r = fl::forward_select(fm, labels, names, max_k, o);
        std::vector<std::pair<std::string, double>> steps;
        for (const auto& s : r.steps) steps.emplace_back(s.feature, s.average_precision);
        return steps;
      },
      "columns"_a, "labels"_a, "max_k"_a, "seed"_a = 0, "epsilon"_a = 0.001,
      "Greedy forward selection; returns [(feature, cross-validated AP), ...].");

  py::class_<fl::Session>(m, "Session")
      .def(py::init([](const fl::Dataset& d, const std::string& params) {
             fl::SessionOptions o;
             o.flags = flag_params(params);
             return std::make_unique<fl::Session>(d, o);
           }),
           "dataset"_a, "params_text"_a = "")
      .def(
          "handle",
          [](fl::Session& s, const std::string& method, const std::string& path,
             const std::map<std::string, std::string>& query, const std::string& body) {
            const std::multimap<std::string, std::string> q(query.begin(), query.end());
            fl::HttpResponse r;
            {
              py::gil_scoped_release release;
              r = s.handle(method, path, q, body);
            }
            return py::make_tuple(r.status, r.body);
          },
          "method"_a, "path"_a, "query"_a = std::map<std::string, std::string>{}, "body"_a = "",
          "Route one request; returns (status, json_text).");

  m.def(
      "serve",
      [](fl::Session& s, const std::string& host, int port) {
        py::gil_scoped_release release;
        fl::serve(s, host, port);
      },
      "session"_a, "host"_a = "127.0.0.1", "port"_a = 8080, "Serve over HTTP (blocks).");
}
