// Python surface of driftkit. Structured values cross the boundary as JSON
// text; the driftkit package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "driftkit/drift.hpp"
#include "driftkit/error.hpp"
#include "driftkit/evaluation.hpp"
#include "driftkit/experiment.hpp"
#include "driftkit/features.hpp"
#include "driftkit/learners.hpp"

namespace py = pybind11;
using namespace driftkit;

namespace {

std::vector<std::pair<std::uint32_t, double>> entries(const FeatureVector& v) {
  return v.entries();
}

std::string run_json(const std::string& config_json, std::optional<Day> delay) {
  auto cfg = parse_config(nlohmann::json::parse(config_json));
  py::gil_scoped_release release;
  return run_experiment(cfg, delay.value_or(cfg.delay_days.front())).summary.dump();
}

std::string generate_json(const std::string& config_json) {
  const auto j = nlohmann::json::parse(config_json);
  auto cfg = parse_config({{"dataset", {{"generator", j}}}});
  return to_jsonl(generate_text_stream(cfg.dataset.generator));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Drift-aware stream classification core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  m.def("_run", &run_json, py::arg("config_json"), py::arg("delay") = py::none());
  m.def("_generate", &generate_json, py::arg("generator_json"));
  m.def("_config_defaults", [](const std::string& config_json) {
    return to_json(parse_config(nlohmann::json::parse(config_json))).dump();
  });

  m.def("aut", [](const std::vector<double>& v) { return aut(std::span<const double>(v)); },
        "Normalized trapezoid area over equally spaced points");
  m.def("hoeffding_bound", &hoeffding_bound, py::arg("range"), py::arg("delta"), py::arg("n"));
  m.def("average_path_length", &average_path_length, py::arg("n"));
  m.def("fnv1a64", [](const std::string& s) { return fnv1a64(s); });

  m.def(
      "metrics",
      [](const std::vector<std::string>& truth, const std::vector<std::string>& predicted,
         const std::string& positive) {
        if (truth.size() != predicted.size()) throw ConfigError("truth and predicted lengths differ");
        std::vector<std::string> classes = truth;
        classes.insert(classes.end(), predicted.begin(), predicted.end());
        classes.push_back(positive);
        ConfusionMatrix cm(classes);
        for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
        const auto r = compute_metrics(cm, positive);
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["f1"] = r.f1;
        d["precision_undefined"] = r.precision_undefined;
        d["recall_undefined"] = r.recall_undefined;
        return d;
      },
      py::arg("truth"), py::arg("predicted"), py::arg("positive") = kMalicious);

  py::class_<VocabFeaturizer>(m, "Vectorizer")
      .def(py::init([](const std::vector<std::vector<std::string>>& docs, const std::string& mode,
                       std::size_t min_freq, std::optional<bool> normalize) {
             const auto vm = mode == "tfidf" ? VocabMode::kTfidf
                             : mode == "bow" ? VocabMode::kCounts
                                             : throw ConfigError("mode must be 'tfidf' or 'bow'");
             auto opts = VocabFeaturizer::default_options(vm);
             opts.min_freq = min_freq;
             if (normalize) opts.normalize = *normalize;
             return VocabFeaturizer::fit(std::span<const std::vector<std::string>>(docs), opts);
           }),
           py::arg("docs"), py::arg("mode") = "tfidf", py::arg("min_freq") = 1,
           py::arg("normalize") = py::none())
      .def("transform",
           [](const VocabFeaturizer& f, const std::vector<std::string>& tokens) {
             return entries(f.transform(std::span<const std::string>(tokens)));
           })
      .def("idf", &VocabFeaturizer::idf)
      .def("index_of", &VocabFeaturizer::index_of)
      .def_property_readonly("vocabulary", &VocabFeaturizer::vocabulary)
      .def_property_readonly("dim", &VocabFeaturizer::dim);

  py::class_<DriftDetector>(m, "DriftDetector")
      .def("update", [](DriftDetector& d, double v) { return to_string(d.update(v)); })
      .def("reset", &DriftDetector::reset)
      .def_property_readonly("name", &DriftDetector::name);
  py::class_<Ddm, DriftDetector>(m, "Ddm")
      .def(py::init([](std::size_t min_samples, double wf, double df) {
             return Ddm(Ddm::Options{min_samples, wf, df});
           }),
           py::arg("min_samples") = 30, py::arg("warning_factor") = 2.0, py::arg("drift_factor") = 3.0);
  py::class_<Eddm, DriftDetector>(m, "Eddm")
      .def(py::init([](std::size_t min_errors, double alpha, double beta) {
             return Eddm(Eddm::Options{min_errors, alpha, beta});
           }),
           py::arg("min_errors") = 30, py::arg("alpha") = 0.95, py::arg("beta") = 0.90);
  py::class_<Adwin, DriftDetector>(m, "Adwin")
      .def(py::init([](double delta) {
             Adwin::Options o;
             o.delta = delta;
             return Adwin(o);
           }),
           py::arg("delta") = 0.002)
      .def_property_readonly("width", &Adwin::width)
      .def_property_readonly("mean", &Adwin::mean)
      .def_property_readonly("detections", &Adwin::detections);
}
