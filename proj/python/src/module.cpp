#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fednet/artifacts.hpp"
#include "fednet/config.hpp"
#include "fednet/error.hpp"
#include "fednet/experiment.hpp"
#include "fednet/metrics.hpp"

namespace py = pybind11;
using namespace fednet;

namespace {

TrainingResult train(const std::vector<NodeSeries>& corpus, const std::string& config_json,
                     std::size_t h, std::size_t p, std::uint64_t seed, const std::string& mode) {
  const RunConfig c = parse_config(config_json);
  const auto clients = make_clients(corpus, preprocess_config(c), split_spec(c), h, p);
  const FederationConfig fed = federation_config(c, seed);
  py::gil_scoped_release release;
  return parse_training_mode(mode) == TrainingMode::Federated ? run_federated(clients, fed)
                                                              : run_centralized(clients, fed);
}

py::dict link_ranking(const Topology& topology, const std::vector<ClientPredictions>& predictions,
                      double beta, std::size_t q, const std::string& aggregation) {
  const LinkRiskResult r = identify_high_load_links(topology, predictions, beta, q,
                                                    parse_link_aggregation(aggregation));
  const RankingComparison cmp = compare_actual_predicted(r.report);
  py::list top;
  for (std::size_t k : r.report.top_predicted())
    top.append(py::make_tuple(r.report.labels[k], r.report.predicted.zeta[k]));
  py::dict out;
  out["labels"] = r.report.labels;
  out["zeta_predicted"] = r.report.predicted.zeta;
  out["zeta_actual"] = r.report.actual.zeta;
  out["top"] = top;
  out["top_overlap"] = cmp.top_overlap;
  out["spearman"] = cmp.spearman;
  return out;
}

}  // namespace

PYBIND11_MODULE(_fednet, m) {
  m.doc() = "Federated traffic forecasting and link-risk ranking";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  py::class_<NodeSeries>(m, "NodeSeries")
      .def(py::init<>())
      .def(py::init([](int node_id, std::vector<double> values, double interval) {
             return NodeSeries{node_id, std::move(values), interval};
           }),
           py::arg("node_id"), py::arg("values"), py::arg("sample_interval_hours") = 1.0)
      .def_readwrite("node_id", &NodeSeries::node_id)
      .def_readwrite("values", &NodeSeries::values)
      .def_readwrite("sample_interval_hours", &NodeSeries::sample_interval_hours)
      .def("__len__", &NodeSeries::size);

  py::class_<Scaler>(m, "Scaler")
      .def_readonly("mean", &Scaler::mean)
      .def_readonly("std_dev", &Scaler::std_dev)
      .def("apply", &Scaler::apply)
      .def("invert", &Scaler::invert);

  m.def(
      "generate_corpus",
      [](std::uint64_t seed, double scale) {
        CorpusOptions opts;
        opts.seed = seed;
        opts.scale = scale;
        return generate_corpus(opts);
      },
      py::arg("seed") = 7, py::arg("scale") = 1.0);
  m.def("load_corpus", &load_corpus, py::arg("directory"));
  m.def("write_series", &write_series, py::arg("path"), py::arg("series"));

  m.def(
      "preprocess",
      [](const NodeSeries& raw, const std::string& config_json) {
        const PreprocessResult r = preprocess_pipeline(raw, preprocess_config(parse_config(config_json)));
        py::dict out;
        out["scaled"] = r.scaled.values;
        out["smoothed"] = r.smoothed.values;
        out["scaler"] = r.scaler;
        out["outliers_replaced"] = r.outliers_replaced;
        return out;
      },
      py::arg("series"), py::arg("config_json") = "{}");

  m.def(
      "make_windows",
      [](const NodeSeries& series, std::size_t h, std::size_t p) {
        const WindowedDataset ds = make_windows(series, h, p);
        return py::make_tuple(ds.inputs, ds.targets);
      },
      py::arg("series"), py::arg("h"), py::arg("p"));

  m.def(
      "r2_score",
      [](const std::vector<double>& y_true, const std::vector<double>& y_pred) {
        return r2_score(std::span<const double>(y_true), std::span<const double>(y_pred));
      },
      py::arg("y_true"), py::arg("y_pred"));

  m.def(
      "fedavg_aggregate",
      [](const std::vector<WeightVector>& weights, const std::vector<double>& counts) {
        if (weights.size() != counts.size())
          throw ConfigError("fedavg_aggregate: one count per weight vector");
        std::vector<ClientUpdate> updates;
        for (std::size_t k = 0; k < weights.size(); ++k) updates.push_back({weights[k], counts[k]});
        return fedavg_aggregate(updates);
      },
      py::arg("weights"), py::arg("counts"));

  py::class_<RoundRecord>(m, "RoundRecord")
      .def_readonly("round", &RoundRecord::round)
      .def_readonly("train_loss", &RoundRecord::train_loss)
      .def_readonly("val_loss", &RoundRecord::val_loss);

  py::class_<ClientPredictions>(m, "ClientPredictions")
      .def_readonly("node_id", &ClientPredictions::node_id)
      .def_readonly("predicted", &ClientPredictions::predicted)
      .def_readonly("actual", &ClientPredictions::actual);

  py::class_<TrainingResult>(m, "TrainingResult")
      .def_readonly("history", &TrainingResult::history)
      .def_readonly("predictions", &TrainingResult::predictions)
      .def_property_readonly("weights",
                             [](const TrainingResult& r) { return get_weights(r.model); })
      .def("save_weights",
           [](const TrainingResult& r, const std::filesystem::path& path) {
             save_weights(path, r.model);
           })
      .def("write", [](const TrainingResult& r, const std::filesystem::path& dir) {
        write_run(dir, r);
      });

  m.def("train", &train, py::arg("corpus"), py::arg("config_json") = "{}", py::arg("h") = 1,
        py::arg("p") = 1, py::arg("seed") = 42, py::arg("mode") = "fed");

  m.def(
      "evaluate",
      [](const std::vector<ClientPredictions>& predictions, std::size_t h, std::size_t p,
         const std::string& mode) {
        const EvaluationReport r = evaluate(predictions, parse_training_mode(mode), h, p);
        std::map<int, double> r2;
        for (const auto& [node, s] : r.per_client) r2[node] = s.r2;
        return py::make_tuple(r2, r.average_r2);
      },
      py::arg("predictions"), py::arg("h"), py::arg("p"), py::arg("mode") = "fed");

  py::class_<Topology>(m, "Topology")
      .def_property_readonly("nodes", &Topology::nodes)
      .def_property_readonly("arc_count", &Topology::arc_count)
      .def(
          "shortest_path",
          [](const Topology& t, int source, int destination) {
            const Path path = shortest_path(t, source, destination);
            std::vector<int> nodes{path.source};
            for (std::size_t a : path.arcs) nodes.push_back(t.arcs()[a].to);
            return nodes;
          },
          py::arg("source"), py::arg("destination"));

  m.def(
      "load_topology",
      [](const std::filesystem::path& path, const std::string& mode) {
        return load_topology(path, parse_topology_mode(mode));
      },
      py::arg("path"), py::arg("mode") = "undirected");

  m.def("rank_links", &link_ranking, py::arg("topology"), py::arg("predictions"),
        py::arg("beta") = 0.5, py::arg("q") = 6, py::arg("aggregation") = "arcs");

  m.def(
      "default_config", [] { return serialize_config(RunConfig{}); },
      "Default run configuration as JSON text");
}
