#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "driftbench/evaluation.hpp"
#include "driftbench/hoeffding_tree.hpp"
#include "driftbench/streams.hpp"

namespace py = pybind11;
using namespace driftbench;

namespace {

StrategyConfig make_config(const std::string& strategy, std::size_t rho, std::size_t batch_size, std::size_t seq_len,
                           double lambda, std::uint64_t seed, std::size_t retrain_interval) {
  StrategyConfig c;
  c.kind = strategy_kind_from_string(strategy);
  c.detector.rho = rho;
  c.detector.batch_size = batch_size;
  c.detector.seq_len = seq_len;
  c.detector.lambda = lambda;
  c.detector.seed = seed;
  if (retrain_interval > 0) c.retrain_interval = retrain_interval;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Recurring concept-drift detection core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("hoeffding_bound", &hoeffding_bound, py::arg("range"), py::arg("delta"), py::arg("n"));
  m.def("standardize", [](const std::vector<double>& x) { return standardize(x); }, py::arg("x"));

  py::class_<HoeffdingTree>(m, "HoeffdingTree")
      .def(py::init([](std::size_t features, std::size_t labels, std::size_t grace, double delta, double tau) {
             TreeConfig cfg;
             cfg.grace_period = grace;
             cfg.split_confidence = delta;
             cfg.tie_threshold = tau;
             return HoeffdingTree(features, labels, cfg);
           }),
           py::arg("feature_count"), py::arg("label_count"), py::arg("grace_period") = 200,
           py::arg("split_confidence") = 1e-7, py::arg("tie_threshold") = 0.05)
      .def("predict", [](const HoeffdingTree& t, const std::vector<double>& x) { return t.predict(x); })
      .def("partial_fit", [](HoeffdingTree& t, const std::vector<double>& x, int y) { t.partial_fit(x, y); })
      .def("reset", &HoeffdingTree::reset)
      .def_property_readonly("leaf_count", &HoeffdingTree::leaf_count)
      .def_property_readonly("depth", &HoeffdingTree::depth)
      .def("to_json", [](const HoeffdingTree& t) { return t.to_json().dump(); })
      .def("__eq__", [](const HoeffdingTree& a, const HoeffdingTree& b) { return a == b; });

  py::class_<Stream>(m, "Stream")
      .def_readonly("name", &Stream::name)
      .def_readonly("feature_names", &Stream::feature_names)
      .def_readonly("labels", &Stream::labels)
      .def("__len__", [](const Stream& s) { return s.instances.size(); })
      .def_property_readonly("features",
                             [](const Stream& s) {
                               std::vector<FeatureVector> rows;
                               rows.reserve(s.instances.size());
                               for (const auto& i : s.instances) rows.push_back(i.features);
                               return rows;
                             })
      .def_property_readonly("targets",
                             [](const Stream& s) {
                               std::vector<int> y;
                               y.reserve(s.instances.size());
                               for (const auto& i : s.instances) y.push_back(i.label);
                               return y;
                             })
      .def_property_readonly("change_points", [](const Stream& s) {
        return s.truth ? s.truth->change_points() : std::vector<std::size_t>{};
      });

  m.def(
      "load_stream",
      [](const std::string& path, std::optional<std::size_t> max_instances) {
        return load_stream(path, std::nullopt, max_instances);
      },
      py::arg("path"), py::arg("max_instances") = py::none());

  m.def(
      "synth_recurring",
      [](const std::vector<std::string>& order, std::size_t length, std::size_t features, double separation,
         double noise, std::uint64_t seed) {
        SynthSpec spec;
        spec.order = order;
        spec.lengths = {length};
        spec.features = features;
        spec.separation = separation;
        spec.noise = noise;
        spec.seed = seed;
        return synth_recurring(spec);
      },
      py::arg("order") = std::vector<std::string>{"A", "B", "A", "B"}, py::arg("length") = 2000,
      py::arg("features") = 32, py::arg("separation") = 4.0, py::arg("noise") = 1.0, py::arg("seed") = 0);

  m.def(
      "run_strategy_json",
      [](const Stream& stream, const std::string& strategy, std::size_t rho, std::size_t batch_size,
         std::size_t seq_len, double lambda, std::uint64_t seed, std::size_t retrain_interval) {
        const StrategyConfig c = make_config(strategy, rho, batch_size, seq_len, lambda, seed, retrain_interval);
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_strategy(stream, c);
        }
        return report.to_json().dump();
      },
      py::arg("stream"), py::arg("strategy") = "driftgan", py::arg("rho") = 100, py::arg("batch_size") = 100,
      py::arg("seq_len") = 4, py::arg("lambda_") = 1.0, py::arg("seed") = 0, py::arg("retrain_interval") = 0);

  m.def("reference_accuracy", &reference_accuracy, py::arg("dataset"), py::arg("strategy"));
}
