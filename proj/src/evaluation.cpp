// SPDX-License-Identifier: Apache-2.0

#include "llmke/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

using RowKey = std::pair<std::string, RelationId>;

ordered_json prf_json(const Prf& prf) {
  return ordered_json{{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

Prf prf_from_json(const json& in) {
  return {in.at("precision").get<double>(), in.at("recall").get<double>(), in.at("f1").get<double>()};
}

std::string fixed(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3f", value);
  return buffer;
}

std::string signed_fixed(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%+.3f", value);
  return buffer;
}

std::string pad(std::string_view text, std::size_t width) {
  std::string out(text);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

}  // namespace

RowScore row_scores(const IdSet& predicted, const IdSet& truth) {
  RowScore score;
  score.is_zero_object_truth = truth.empty();
  if (predicted.empty() && truth.empty()) {
    score.precision = score.recall = score.f1 = 1.0;
    return score;
  }
  if (predicted.empty() || truth.empty()) return score;

  std::size_t overlap = 0;
  for (const auto& id : predicted) overlap += truth.count(id);
  score.precision = static_cast<double>(overlap) / static_cast<double>(predicted.size());
  score.recall = static_cast<double>(overlap) / static_cast<double>(truth.size());
  const double sum = score.precision + score.recall;
  score.f1 = sum > 0.0 ? 2.0 * score.precision * score.recall / sum : 0.0;
  return score;
}

Prf relation_macro(std::span<const RowScore> rows) {
  if (rows.empty()) throw ConfigError("macro average over zero rows");
  Prf out;
  for (const auto& row : rows) {
    out.precision += row.precision;
    out.recall += row.recall;
    out.f1 += row.f1;
  }
  const auto n = static_cast<double>(rows.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

IdSet to_score_set(std::span<const std::string> values, ScoreMode mode) {
  IdSet out;
  for (const auto& value : values) {
    std::string item = trim(value);
    if (item.empty()) continue;
    if (mode == ScoreMode::ids) {
      if (item.front() == 'q') item.front() = 'Q';
    } else {
      item = to_lower(item);
    }
    out.insert(std::move(item));
  }
  return out;
}

EvaluationReport overall_report(std::span<const PredictionRecord> predictions,
                                std::span<const GroundTruthRecord> truth, ScoreMode mode) {
  std::map<RowKey, const PredictionRecord*> by_key;
  for (const auto& row : predictions) {
    const RowKey key{row.query.subject_qid, row.query.relation};
    if (!by_key.emplace(key, &row).second) {
      throw DataError("duplicate prediction for " + key.first + " / " + std::string(to_string(key.second)));
    }
  }

  EvaluationReport report;
  report.mode = mode;
  std::map<RelationId, std::vector<RowScore>> rows_by_relation;
  std::vector<RowScore> zero_rows;
  std::set<RowKey> seen;
  for (const auto& row : truth) {
    const RowKey key{row.query.subject_qid, row.query.relation};
    if (!seen.insert(key).second) {
      throw DataError("duplicate truth row for " + key.first + " / " + std::string(to_string(key.second)));
    }
    const auto& truth_values = mode == ScoreMode::ids ? row.object_ids : row.object_labels;
    IdSet predicted;
    if (const auto it = by_key.find(key); it != by_key.end()) {
      const auto& values = mode == ScoreMode::ids ? it->second->object_ids : it->second->object_labels;
      predicted = to_score_set(values, mode);
    } else {
      ++report.missing_predictions;
    }
    const RowScore score = row_scores(predicted, to_score_set(truth_values, mode));
    rows_by_relation[row.query.relation].push_back(score);
    if (score.is_zero_object_truth) zero_rows.push_back(score);
  }

  for (const auto& [relation, rows] : rows_by_relation) {
    report.per_relation[relation] = RelationScore{relation_macro(rows), rows.size()};
  }
  if (!zero_rows.empty()) report.zero_object = RelationScore{relation_macro(zero_rows), zero_rows.size()};
  if (!report.per_relation.empty()) {
    for (const auto& [relation, score] : report.per_relation) {
      report.overall.precision += score.scores.precision;
      report.overall.recall += score.scores.recall;
      report.overall.f1 += score.scores.f1;
    }
    const auto n = static_cast<double>(report.per_relation.size());
    report.overall.precision /= n;
    report.overall.recall /= n;
    report.overall.f1 /= n;
  }
  return report;
}

std::string report_to_json(const EvaluationReport& report) {
  ordered_json out;
  out["mode"] = report.mode == ScoreMode::ids ? "ids" : "labels";
  out["overall"] = prf_json(report.overall);
  out["missing_predictions"] = report.missing_predictions;
  out["per_relation"] = ordered_json::object();
  for (const auto& [relation, score] : report.per_relation) {
    ordered_json entry = prf_json(score.scores);
    entry["rows"] = score.row_count;
    out["per_relation"][std::string(to_string(relation))] = entry;
  }
  if (report.zero_object) {
    ordered_json entry = prf_json(report.zero_object->scores);
    entry["rows"] = report.zero_object->row_count;
    out["zero_object"] = entry;
  } else {
    out["zero_object"] = nullptr;
  }
  return out.dump(2);
}

EvaluationReport report_from_json(std::string_view json_text) {
  EvaluationReport report;
  try {
    const json in = json::parse(json_text);
    const std::string mode = in.at("mode").get<std::string>();
    if (mode != "ids" && mode != "labels") throw DataError("unknown score mode \"" + mode + "\"");
    report.mode = mode == "ids" ? ScoreMode::ids : ScoreMode::labels;
    report.overall = prf_from_json(in.at("overall"));
    report.missing_predictions = in.value("missing_predictions", std::size_t{0});
    for (const auto& [name, entry] : in.at("per_relation").items()) {
      const auto relation = parse_relation(name);
      if (!relation) throw DataError("unknown relation \"" + name + "\" in report");
      report.per_relation[*relation] = RelationScore{prf_from_json(entry), entry.at("rows").get<std::size_t>()};
    }
    if (in.contains("zero_object") && !in.at("zero_object").is_null()) {
      const json& entry = in.at("zero_object");
      report.zero_object = RelationScore{prf_from_json(entry), entry.at("rows").get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string report_to_table(const EvaluationReport& report) {
  std::size_t width = std::string_view("Zero-object").size();
  for (const auto& [relation, score] : report.per_relation) width = std::max(width, to_string(relation).size());
  width += 2;

  auto line = [&](std::string_view name, const Prf& prf, std::string rows) {
    return pad(name, width) + fixed(prf.precision) + "  " + fixed(prf.recall) + "  " + fixed(prf.f1) + "  " +
           rows + "\n";
  };
  std::string out = pad("Relation", width) + "P      R      F1     rows\n";
  for (const auto& [relation, score] : report.per_relation) {
    out += line(to_string(relation), score.scores, std::to_string(score.row_count));
  }
  if (report.zero_object) {
    out += line("Zero-object", report.zero_object->scores, std::to_string(report.zero_object->row_count));
  }
  out += line("Average", report.overall, "");
  if (report.missing_predictions > 0) {
    out += "missing predictions: " + std::to_string(report.missing_predictions) + "\n";
  }
  return out;
}

std::vector<F1Delta> compare_runs(const EvaluationReport& a, const EvaluationReport& b) {
  if (a.per_relation.size() != b.per_relation.size()) {
    throw ConfigError("reports cover different relation sets");
  }
  std::vector<F1Delta> out;
  for (const auto& [relation, score_a] : a.per_relation) {
    const auto it = b.per_relation.find(relation);
    if (it == b.per_relation.end()) {
      throw ConfigError("relation " + std::string(to_string(relation)) + " missing from the second report");
    }
    if (it->second.row_count != score_a.row_count) {
      throw ConfigError("relation " + std::string(to_string(relation)) + " has " +
                        std::to_string(score_a.row_count) + " rows in one report and " +
                        std::to_string(it->second.row_count) + " in the other");
    }
    out.push_back({std::string(to_string(relation)), score_a.scores.f1, it->second.scores.f1,
                   it->second.scores.f1 - score_a.scores.f1});
  }
  out.push_back({"Average", a.overall.f1, b.overall.f1, b.overall.f1 - a.overall.f1});
  return out;
}

std::string compare_table(std::span<const F1Delta> rows, std::string_view label_a, std::string_view label_b) {
  std::size_t width = std::string_view("Relation").size();
  for (const auto& row : rows) width = std::max(width, row.name.size());
  width += 2;
  const std::size_t column = std::max<std::size_t>({label_a.size(), label_b.size(), 6}) + 2;

  std::string out = pad("Relation", width) + pad(label_a, column) + pad(label_b, column) + "delta\n";
  for (const auto& row : rows) {
    out += pad(row.name, width) + pad(fixed(row.f1_a), column) + pad(fixed(row.f1_b), column) +
           signed_fixed(row.delta) + "\n";
  }
  return out;
}

}  // namespace llmke
