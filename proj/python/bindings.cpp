#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "ebmkit/error.hpp"
#include "ebmkit/logistic.hpp"
#include "ebmkit/metrics.hpp"
#include "ebmkit/model.hpp"
#include "ebmkit/preprocess.hpp"
#include "ebmkit/reporting.hpp"
#include "ebmkit/synth.hpp"
#include "ebmkit/train.hpp"

namespace py = pybind11;
using namespace ebmkit;

namespace {

py::array_t<double> to_array(std::span<const double> xs) {
  py::array_t<double> a(static_cast<py::ssize_t>(xs.size()));
  std::copy(xs.begin(), xs.end(), a.mutable_data());
  return a;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

}  // namespace

PYBIND11_MODULE(_ebmkit, m) {
  m.doc() = "Explainable boosting machines for tabular clinical risk models";

  auto base = py::register_exception<Error>(m, "EbmkitError", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", base);
  py::register_exception<MetricError>(m, "MetricError", base);

  py::class_<Cohort>(m, "Cohort")
      .def_static(
          "load",
          [](const std::string& csv, const std::string& schema) { return load_csv(csv, FeatureSchema::load(schema)); },
          py::arg("csv"), py::arg("schema"))
      .def_property_readonly("rows", &Cohort::rows)
      .def_property_readonly("columns",
                             [](const Cohort& c) {
                               std::vector<std::string> names;
                               for (const auto& col : c.schema().columns()) names.push_back(col.name);
                               return names;
                             })
      .def_property_readonly("row_ids", [](const Cohort& c) { return c.row_ids(); })
      .def("numeric", [](const Cohort& c, const std::string& name) { return to_array(c.numeric(name)); })
      .def("tokens",
           [](const Cohort& c, const std::string& name) {
             const auto t = c.tokens(name);
             return std::vector<std::string>(t.begin(), t.end());
           })
      .def("labels", [](const Cohort& c, const std::string& outcome) { return to_array(c.labels(outcome)); })
      .def("subset", [](const Cohort& c, const std::vector<std::size_t>& rows) { return c.subset(rows); })
      .def("schema_json", [](const Cohort& c) { return c.schema().to_json().dump(); })
      .def("to_csv", [](const Cohort& c) {
        std::ostringstream os;
        write_csv(os, c);
        return os.str();
      });

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return preset(name).to_json().dump(); });
  m.def(
      "generate_synthetic",
      [](const std::string& spec_json, std::size_t n, std::uint64_t seed) {
        auto data = generate_synthetic(SynthSpec::from_json(nlohmann::json::parse(spec_json)), n, seed);
        return py::make_tuple(std::move(data.cohort), to_array(data.true_logits));
      },
      py::arg("spec_json"), py::arg("n"), py::arg("seed") = 0);

  py::class_<EbmModel>(m, "EbmModel")
      .def_static("deserialize", [](const std::string& bytes) { return deserialize(bytes); })
      .def("serialize", [](const EbmModel& model) { return serialize(model); })
      .def_readonly("intercept", &EbmModel::intercept)
      .def_property_readonly("feature_names",
                             [](const EbmModel& model) {
                               std::vector<std::string> names;
                               for (const auto& f : model.features) names.push_back(f.name());
                               return names;
                             })
      .def_property_readonly("pair_names",
                             [](const EbmModel& model) {
                               std::vector<std::pair<std::string, std::string>> names;
                               for (const auto& p : model.pairs) {
                                 names.emplace_back(model.features[p.features[0]].name(),
                                                    model.features[p.features[1]].name());
                               }
                               return names;
                             })
      .def("predict_logit", [](const EbmModel& model, const Cohort& c) { return to_array(predict_logit(model, c)); })
      .def("predict_proba", [](const EbmModel& model, const Cohort& c) { return to_array(predict_proba(model, c)); })
      .def("explain",
           [](const EbmModel& model, const Cohort& c, std::size_t row) {
             if (row >= c.rows()) throw py::index_error("row out of range");
             const auto e = local_explanation(model, model.bin(c), row);
             py::list terms;
             for (const auto& t : e.terms) terms.append(py::make_tuple(t.name, t.contribution));
             py::dict d;
             d["intercept"] = e.intercept;
             d["terms"] = terms;
             d["logit"] = e.logit;
             d["probability"] = e.probability;
             return d;
           })
      .def(
          "importance",
          [](const EbmModel& model, const Cohort* reference) {
            const auto entries = reference ? feature_importance(model, model.bin(*reference)) : feature_importance(model);
            std::vector<std::pair<std::string, double>> out;
            for (const auto& e : entries) out.emplace_back(e.name, e.importance);
            return out;
          },
          py::arg("reference") = nullptr)
      .def("shape_json", [](const EbmModel& model, const std::string& feature) {
        return export_shape(model, feature).to_json().dump();
      });

  m.def(
      "train_ebm",
      [](const Cohort& cohort, const std::string& outcome, const std::string& config_json, bool exclusions) {
        const auto config = TrainConfig::from_json(nlohmann::json::parse(config_json));
        const auto rules = exclusions ? ExclusionRuleSet::defaults_for(cohort.schema()) : ExclusionRuleSet{};
        py::gil_scoped_release release;
        return train_ebm_pipeline(cohort, config, outcome, rules);
      },
      py::arg("cohort"), py::arg("outcome"), py::arg("config_json") = "{}", py::arg("exclusions") = true);

  py::class_<LrModel>(m, "LrModel")
      .def_readonly("columns", &LrModel::columns)
      .def_readonly("weights", &LrModel::weights)
      .def_readonly("bias", &LrModel::bias)
      .def("predict_proba", [](const LrModel& model, const Cohort& c) { return to_array(predict_lr(model, c)); })
      .def("serialize", [](const LrModel& model) { return serialize(model); });

  m.def(
      "train_lr",
      [](const Cohort& cohort, const std::string& outcome, double l2) {
        LrOptions o;
        o.l2 = l2;
        return train_lr_pipeline(cohort, outcome, o);
      },
      py::arg("cohort"), py::arg("outcome"), py::arg("l2") = 1e-4);

  m.def("auroc", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
                    const py::array_t<double, py::array::c_style | py::array::forcecast>& labels) {
    return auroc(from_array(scores), from_array(labels));
  });
  m.def("log_loss", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
                       const py::array_t<double, py::array::c_style | py::array::forcecast>& labels) {
    return log_loss(from_array(probs), from_array(labels));
  });
  m.def(
      "calibration_curve",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& labels, int bins, bool uniform) {
        const auto pts = calibration_curve(from_array(probs), from_array(labels), bins,
                                           uniform ? CalibrationBinning::kUniform : CalibrationBinning::kQuantile);
        std::vector<std::tuple<double, double, std::size_t>> out;
        for (const auto& p : pts) out.emplace_back(p.predicted, p.observed, p.count);
        return out;
      },
      py::arg("probs"), py::arg("labels"), py::arg("bins") = 10, py::arg("uniform") = false);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
