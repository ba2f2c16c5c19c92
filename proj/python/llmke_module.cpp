// SPDX-License-Identifier: Apache-2.0

// Thin binding over the core library. Structured results cross the boundary
// as JSON text; the Python package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llmke/common.hpp"
#include "llmke/context.hpp"
#include "llmke/dataset.hpp"
#include "llmke/evaluation.hpp"
#include "llmke/gap_audit.hpp"
#include "llmke/pipeline.hpp"
#include "llmke/prediction.hpp"
#include "llmke/prompting.hpp"

namespace py = pybind11;
using namespace llmke;

namespace {

std::filesystem::path data_dir_or_default(const std::string& data_dir) {
  return data_dir.empty() ? default_data_dir() : std::filesystem::path(data_dir);
}

py::dict run_py(const std::string& config_json) {
  const RunConfig config = config_from_json(config_json);
  RunResult result;
  {
    py::gil_scoped_release release;
    result = run(config);
  }
  py::dict out;
  out["rows"] = result.predictions.size();
  out["manifest"] = result.manifest_json;
  out["report"] = result.report ? py::object(py::str(report_to_json(*result.report))) : py::object(py::none());
  return out;
}

std::string evaluate_py(const std::string& predictions, const std::string& truth, const std::string& mode,
                        const std::string& data_dir) {
  if (mode != "ids" && mode != "labels") throw ConfigError("score mode must be ids or labels");
  const ProfileTable profiles = ProfileTable::load(data_dir_or_default(data_dir) / "relations.jsonc");
  const auto rows = load_predictions(predictions);
  const auto truth_rows = load_truth(truth, profiles);
  return report_to_json(overall_report(rows, truth_rows, mode == "ids" ? ScoreMode::ids : ScoreMode::labels));
}

std::string audit_py(const std::string& predictions, const std::string& truth_store, const std::string& fixture_dir,
                     double aligned_below, double kb_gap_at_least, const std::string& data_dir) {
  const ProfileTable profiles = ProfileTable::load(data_dir_or_default(data_dir) / "relations.jsonc");
  TruthStore store = TruthStore::load_or_empty(truth_store);
  CachedTruthSource truth(store, nullptr);

  std::optional<PageStore> pages_store;
  std::optional<CachedPageSource> pages;
  std::optional<ContextAssembler> assembler;
  ImdbTable imdb;
  ContextLookup context;
  if (!fixture_dir.empty()) {
    pages_store.emplace(PageStore::load_or_empty(std::filesystem::path(fixture_dir) / "pages.jsonl"));
    pages.emplace(*pages_store, nullptr);
    imdb = ImdbTable::load_or_empty(std::filesystem::path(fixture_dir) / "imdb.jsonl");
    assembler.emplace(*pages, &imdb);
    context = [&](const PredictionRecord& row) -> std::string {
      try {
        return assembler->assemble(row.query, profiles.profile(row.query.relation)).render();
      } catch (const MissingFixtureError&) {
        return {};
      }
    };
  }
  const auto rows = load_predictions(predictions);
  return findings_to_jsonl(audit_gaps(rows, truth, context, {aligned_below, kb_gap_at_least}));
}

std::string compare_py(const std::string& report_a, const std::string& report_b, const std::string& label_a,
                       const std::string& label_b) {
  const auto rows = compare_runs(report_from_json(report_a), report_from_json(report_b));
  return compare_table(rows, label_a, label_b);
}

py::tuple row_scores_py(const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
  const RowScore s = row_scores(IdSet(predicted.begin(), predicted.end()), IdSet(truth.begin(), truth.end()));
  return py::make_tuple(s.precision, s.recall, s.f1);
}

py::tuple parse_py(const std::string& reply) {
  const ParsedObjectList parsed = parse_object_list(reply);
  return py::make_tuple(parsed.objects, parsed.failed);
}

}  // namespace

PYBIND11_MODULE(_llmke, m) {
  m.doc() = "Knowledge-base construction by probing chat models";

  static py::exception<Error> error(m, "Error");
  static py::exception<DataError> data_error(m, "DataError", error.ptr());
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<TransportError> transport_error(m, "TransportError", error.ptr());
  static py::exception<MissingFixtureError> missing_fixture(m, "MissingFixtureError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const MissingFixtureError& e) {
      missing_fixture(e.what());
    } catch (const TransportError& e) {
      transport_error(e.what());
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const Error& e) {
      error(e.what());
    }
  });

  m.def("run", &run_py, py::arg("config_json"));
  m.def("evaluate", &evaluate_py, py::arg("predictions"), py::arg("truth"), py::arg("mode") = "ids",
        py::arg("data_dir") = "");
  m.def("audit", &audit_py, py::arg("predictions"), py::arg("truth_store"), py::arg("fixture_dir") = "",
        py::arg("aligned_below") = AuditThresholds{}.aligned_below,
        py::arg("kb_gap_at_least") = AuditThresholds{}.kb_gap_at_least, py::arg("data_dir") = "");
  m.def("compare", &compare_py, py::arg("report_a"), py::arg("report_b"), py::arg("label_a") = "a",
        py::arg("label_b") = "b");
  m.def("row_scores", &row_scores_py, py::arg("predicted"), py::arg("truth"));
  m.def("parse_object_list", &parse_py, py::arg("reply"));
  m.def("render_object_list", [](const std::vector<std::string>& objects) { return render_object_list(objects); });
  m.def("templates_checksum", [] { return TemplateSet::shipped().checksum(); });
  m.def("relations", [] {
    std::vector<std::string> names;
    for (const RelationId relation : all_relations()) names.emplace_back(to_string(relation));
    return names;
  });
  m.def("config_defaults", [] { return config_to_json(RunConfig{}); });
}
