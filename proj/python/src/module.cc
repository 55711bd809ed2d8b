/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

/*!
 * \file module.cc
 * \brief Python bindings: datasets, pruning, splits, training, evaluation,
 *  tuning and the metrics. Structured results cross the boundary as dicts.
 */
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "tensortune/cli.h"
#include "tensortune/metrics.h"
#include "tensortune/models.h"
#include "tensortune/oracle.h"
#include "tensortune/sampler.h"
#include "tensortune/search.h"
#include "tensortune/splitter.h"
#include "tensortune/transfer.h"
#include "tensortune/workload.h"

namespace py = pybind11;

namespace tensortune {
namespace {

py::object ToPython(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json FromPython(const py::object& o) {
  if (o.is_none()) return Json::object();
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

SplitStrategy StrategyFrom(const std::string& name) {
  auto s = ParseSplitStrategy(name);
  if (!s) throw DataError("unknown split strategy \"" + name + "\"");
  return *s;
}

ModelKind KindFrom(const std::string& name) {
  auto k = ParseModelKind(name);
  if (!k) throw DataError("unknown model kind \"" + name + "\"");
  return *k;
}

}  // namespace
}  // namespace tensortune

PYBIND11_MODULE(_core, m) {
  using namespace tensortune;
  m.doc() = "Learned cost models for tensor-program tuning.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.def(
      "pairwise_comparison_accuracy",
      [](const std::vector<double>& y, const std::vector<double>& y_hat) {
        return PairwiseComparisonAccuracy({y, y_hat});
      },
      py::arg("y"), py::arg("y_hat"));
  m.def(
      "top_k_score",
      [](const std::vector<double>& y, const std::vector<double>& y_hat, int k) { return TopKScore({y, y_hat}, k); },
      py::arg("y"), py::arg("y_hat"), py::arg("k"));
  m.def(
      "rmse", [](const std::vector<double>& y, const std::vector<double>& y_hat) { return Rmse({y, y_hat}); },
      py::arg("y"), py::arg("y_hat"));
  m.def(
      "ranking_loss",
      [](const std::vector<double>& y, const std::vector<double>& y_hat) { return RankingLoss({y, y_hat}); },
      py::arg("y"), py::arg("y_hat"));

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("num_tasks", [](const Dataset& d) { return d.tasks().size(); })
      .def_property_readonly("num_records", [](const Dataset& d) { return d.records().size(); })
      .def_property_readonly("targets", [](const Dataset& d) { return d.TaskTargets(); })
      .def_property_readonly("task_ids",
                             [](const Dataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& t : d.tasks()) ids.push_back(t.task_id);
                               return ids;
                             })
      .def("fingerprint", &Dataset::Fingerprint)
      .def("save", [](const Dataset& d, const std::string& path) { SaveDataset(d, path); }, py::arg("path"))
      .def("characterize", [](const Dataset& d) { return FormatCharacterizationTable(Characterize(d)); })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; })
      .def("__repr__", [](const Dataset& d) {
        return "<Dataset tasks=" + std::to_string(d.tasks().size()) +
               " records=" + std::to_string(d.records().size()) + ">";
      });

  m.def(
      "load_dataset",
      [](const std::string& path, bool lenient) { return LoadDataset(path, LoadOptions{lenient}); },
      py::arg("path"), py::arg("lenient") = false);
  m.def(
      "gen_dataset",
      [](int64_t tasks, int64_t records, const py::object& oracle, uint64_t seed) {
        OracleConfig cfg = oracle.is_none() ? OracleConfig::Default() : OracleConfig::FromJson(FromPython(oracle));
        cfg.seed = seed;
        return GenDataset(tasks, records, cfg);
      },
      py::arg("tasks"), py::arg("records"), py::arg("oracle") = py::none(), py::arg("seed") = 0);

  m.def(
      "prune",
      [](const Dataset& ds, double fraction, double quantile, int64_t min_records, uint64_t seed) {
        SamplerConfig cfg;
        cfg.target_fraction = fraction;
        cfg.low_perf_quantile = quantile;
        cfg.min_records_per_task = min_records;
        cfg.seed = seed;
        PruneResult r = PruneDataset(ds, cfg);
        return py::make_tuple(std::move(r.dataset), ToPython(r.report.ToJson()));
      },
      py::arg("dataset"), py::arg("fraction") = 0.57, py::arg("quantile") = 0.1, py::arg("min_records") = 8,
      py::arg("seed") = 0);

  py::class_<SplitAssignment>(m, "SplitAssignment")
      .def_property_readonly("train_ids", [](const SplitAssignment& s) { return s.train_ids; })
      .def_property_readonly("test_ids", [](const SplitAssignment& s) { return s.test_ids; })
      .def("to_dict", [](const SplitAssignment& s) { return ToPython(s.ToJson()); })
      .def_static("from_dict", [](const py::object& o) { return SplitAssignment::FromJson(FromPython(o)); });
  m.def(
      "split",
      [](const Dataset& ds, const std::string& strategy, double ratio, uint64_t seed) {
        return Split(ds, StrategyFrom(strategy), ratio, seed);
      },
      py::arg("dataset"), py::arg("strategy") = "within_task", py::arg("ratio") = 0.2, py::arg("seed") = 0);

  py::class_<CostModel>(m, "CostModel")
      .def_property_readonly("kind", [](const CostModel& c) { return std::string(ModelKindName(c.kind())); })
      .def_property_readonly("provenance", [](const CostModel& c) { return ToPython(c.provenance()); })
      .def("save", &CostModel::Save, py::arg("path"))
      .def_static("load", &CostModel::Load, py::arg("path"));

  m.def(
      "train",
      [](const std::string& kind, const Dataset& ds, const SplitAssignment& split, const py::object& config) {
        Json j = FromPython(config);
        ModelKind k = KindFrom(kind);
        GbdtConfig g = k == ModelKind::kGbdt ? GbdtConfig::FromJson(j) : GbdtConfig{};
        TrainConfig t = k == ModelKind::kGbdt ? TrainConfig{} : TrainConfig::FromJson(j);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = TrainModel(k, ds, split, g, t);
        }
        return py::make_tuple(std::move(r.model), ToPython(r.report.ToJson()));
      },
      py::arg("kind"), py::arg("dataset"), py::arg("split"), py::arg("config") = py::none());
  m.def(
      "evaluate",
      [](const CostModel& model, const Dataset& ds, const SplitAssignment& split) {
        return ToPython(Evaluate(model, ds, split).ToJson());
      },
      py::arg("model"), py::arg("dataset"), py::arg("split"));
  m.def(
      "tune",
      [](const Dataset& ds, const CostModel& model, const py::object& oracle, const py::object& search) {
        OracleConfig oc = oracle.is_none() ? OracleConfig::Default() : OracleConfig::FromJson(FromPython(oracle));
        SearchConfig sc = SearchConfig::FromJson(FromPython(search));
        SynthOracle o(oc);
        TuneResult r;
        {
          py::gil_scoped_release release;
          r = Tune(ds, model, o, sc);
        }
        return ToPython(r.ToJson());
      },
      py::arg("dataset"), py::arg("model"), py::arg("oracle") = py::none(), py::arg("search") = py::none());
  m.def(
      "adapt_hardware",
      [](const CostModel& model, const std::string& src, const std::string& dst) {
        const HardwareParams* s = FindBuiltinHardware(src);
        const HardwareParams* d = FindBuiltinHardware(dst);
        if (!s || !d) throw DataError("unknown builtin hardware target");
        return AdaptHardware(model, *s, *d);
      },
      py::arg("model"), py::arg("src"), py::arg("dst"));
  m.def("builtin_targets", [] {
    std::vector<std::string> ids;
    for (const auto& hw : BuiltinHardware()) ids.push_back(hw.target_id);
    return ids;
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = RunCli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
  m.attr("__version__") = std::string(kToolVersion);
}
