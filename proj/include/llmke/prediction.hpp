// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "llmke/dataset.hpp"
#include "llmke/entity_mapping.hpp"
#include "llmke/prompting.hpp"

namespace llmke {

/// One output row. object_labels and object_ids are parallel; an object
/// that found no candidates keeps its label and has "" as its ID.
struct PredictionRecord {
  QueryRecord query;
  std::vector<std::string> object_labels;
  std::vector<std::string> object_ids;
  PromptSetting setting = PromptSetting::question;
  /// Final model reply, verbatim.
  std::string raw_model_text;
  /// Step-one reply of the context exchange; empty for other settings.
  std::string step_one_text;
  bool parse_failed = false;
  /// Row-level failure in a live run; the row then has no objects.
  std::string error;
  std::vector<MappingOutcome> mapping_outcomes;

  bool operator==(const PredictionRecord&) const = default;
};

/// One line per row, input order, fixed key order. Identical rows give
/// identical bytes.
std::string render_predictions(std::span<const PredictionRecord> rows);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> rows);

/// Reads prediction files written above or plain challenge-format
/// predictions (only the five challenge keys required).
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

}  // namespace llmke
