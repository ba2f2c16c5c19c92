// SPDX-License-Identifier: Apache-2.0

#include "llmke/prediction.hpp"

#include <json.hpp>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ordered_json outcome_json(const MappingOutcome& outcome) {
  ordered_json out;
  out["object_label"] = outcome.object_label;
  out["resolved_qid"] = outcome.resolved_qid ? ordered_json(*outcome.resolved_qid) : ordered_json(nullptr);
  out["strategy_used"] = to_string(outcome.strategy_used);
  out["candidate_count"] = outcome.candidate_count;
  out["error_class"] = outcome.error_class ? ordered_json(to_string(*outcome.error_class)) : ordered_json(nullptr);
  return out;
}

MappingOutcome outcome_from_json(const json& in) {
  MappingOutcome outcome;
  outcome.object_label = in.at("object_label").get<std::string>();
  if (!in.at("resolved_qid").is_null()) outcome.resolved_qid = in.at("resolved_qid").get<std::string>();
  const auto strategy = parse_strategy(in.at("strategy_used").get<std::string>());
  if (!strategy) throw DataError("unknown strategy " + in.at("strategy_used").dump());
  outcome.strategy_used = *strategy;
  outcome.candidate_count = in.at("candidate_count").get<std::size_t>();
  if (!in.at("error_class").is_null()) {
    const auto error = parse_mapping_error(in.at("error_class").get<std::string>());
    if (!error) throw DataError("unknown error class " + in.at("error_class").dump());
    outcome.error_class = *error;
  }
  return outcome;
}

std::vector<std::string> strings(const json& object, const char* key) {
  std::vector<std::string> out;
  for (const auto& value : object.at(key)) {
    out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  return out;
}

}  // namespace

std::string render_predictions(std::span<const PredictionRecord> rows) {
  std::string out;
  for (const auto& row : rows) {
    ordered_json line;
    line["SubjectEntity"] = row.query.subject_label;
    line["SubjectEntityID"] = row.query.subject_qid;
    line["Relation"] = to_string(row.query.relation);
    line["ObjectEntities"] = row.object_labels;
    line["ObjectEntitiesID"] = row.object_ids;
    line["Setting"] = to_string(row.setting);
    line["RawModelText"] = row.raw_model_text;
    line["StepOneText"] = row.step_one_text;
    line["ParseFailed"] = row.parse_failed;
    line["Error"] = row.error;
    line["MappingOutcomes"] = ordered_json::array();
    for (const auto& outcome : row.mapping_outcomes) line["MappingOutcomes"].push_back(outcome_json(outcome));
    out += line.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> rows) {
  write_file(path, render_predictions(rows));
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> rows;
  for (const auto& line : read_jsonl_lines(path)) {
    const std::string where = path.string() + ":" + std::to_string(line.number);
    PredictionRecord row;
    row.query = parse_query_line(line.text, where);
    try {
      const json object = json::parse(line.text);
      row.object_labels = strings(object, "ObjectEntities");
      row.object_ids = strings(object, "ObjectEntitiesID");
      if (row.object_labels.size() == 1 && row.object_labels[0].empty() && row.object_ids.size() == 1 &&
          row.object_ids[0].empty()) {
        row.object_labels.clear();
        row.object_ids.clear();
      }
      if (row.object_labels.size() != row.object_ids.size()) {
        throw DataError("ObjectEntities and ObjectEntitiesID differ in length");
      }
      if (object.contains("Setting")) {
        const auto setting = parse_setting(object.at("Setting").get<std::string>());
        if (!setting) throw DataError("unknown setting " + object.at("Setting").dump());
        row.setting = *setting;
      }
      row.raw_model_text = object.value("RawModelText", "");
      row.step_one_text = object.value("StepOneText", "");
      row.parse_failed = object.value("ParseFailed", false);
      row.error = object.value("Error", "");
      if (object.contains("MappingOutcomes")) {
        for (const auto& outcome : object.at("MappingOutcomes")) {
          row.mapping_outcomes.push_back(outcome_from_json(outcome));
        }
      }
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace llmke
