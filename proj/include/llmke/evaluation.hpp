// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/dataset.hpp"
#include "llmke/prediction.hpp"

namespace llmke {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const Prf&) const = default;
};

struct RowScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool is_zero_object_truth = false;
};

using IdSet = std::set<std::string>;

/// Set-overlap scores. p = |P∩T|/|P|, r = |P∩T|/|T|; both empty scores 1,
/// exactly one empty scores 0.
RowScore row_scores(const IdSet& predicted, const IdSet& truth);

/// Arithmetic means of per-row p, r and f1. Throws on an empty span.
Prf relation_macro(std::span<const RowScore> rows);

/// Scoring unit: resolved IDs (headline) or lowercased labels (debugging).
enum class ScoreMode { ids, labels };

/// Normalized set view of an object list: empties dropped, QIDs uppercased
/// (ids) or labels lowercased and trimmed (labels).
IdSet to_score_set(std::span<const std::string> values, ScoreMode mode = ScoreMode::ids);

struct RelationScore {
  Prf scores;
  std::size_t row_count = 0;

  bool operator==(const RelationScore&) const = default;
};

struct EvaluationReport {
  std::map<RelationId, RelationScore> per_relation;
  /// Macro over rows whose truth is empty; absent when there are none.
  std::optional<RelationScore> zero_object;
  /// Unweighted mean over the relations present in the truth.
  Prf overall;
  std::size_t missing_predictions = 0;
  ScoreMode mode = ScoreMode::ids;

  bool operator==(const EvaluationReport&) const = default;
};

/// Aligns predictions to truth on (subject_qid, relation). Truth rows with
/// no prediction score as empty predictions; duplicate keys throw.
EvaluationReport overall_report(std::span<const PredictionRecord> predictions,
                                std::span<const GroundTruthRecord> truth, ScoreMode mode = ScoreMode::ids);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view json_text);

/// Relation | P | R | F1 | rows, then the zero-object and average rows.
std::string report_to_table(const EvaluationReport& report);

struct F1Delta {
  std::string name;
  double f1_a = 0.0;
  double f1_b = 0.0;
  double delta = 0.0;
};

/// Signed F1 deltas (b - a) per relation plus the overall row. Reports must
/// cover the same relations with the same row counts.
std::vector<F1Delta> compare_runs(const EvaluationReport& a, const EvaluationReport& b);
std::string compare_table(std::span<const F1Delta> rows, std::string_view label_a, std::string_view label_b);

}  // namespace llmke
