// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/context.hpp"
#include "llmke/dataset.hpp"
#include "llmke/entity_mapping.hpp"
#include "llmke/evaluation.hpp"
#include "llmke/llm_client.hpp"
#include "llmke/prediction.hpp"
#include "llmke/prompting.hpp"

namespace llmke {

/// Where model replies and external lookups come from.
///   live    : HTTP endpoints, responses cached under cache_dir
///   replay  : fixture_dir only; any miss aborts the run
///   scripted: replies from a tag-keyed script, lookups replayed from
///              fixture_dir, replies recorded into fixture_dir
enum class ProviderMode { live, replay, scripted };
std::string_view to_string(ProviderMode mode);
std::optional<ProviderMode> parse_provider_mode(std::string_view name);

struct RunConfig {
  std::filesystem::path input_path;
  std::filesystem::path train_path;
  /// Optional; a report is produced when set.
  std::filesystem::path truth_path;
  std::filesystem::path output_dir = "out";
  std::filesystem::path fixture_dir;
  std::filesystem::path cache_dir = ".llmke-cache";
  std::filesystem::path script_path;
  /// Empty means default_data_dir().
  std::filesystem::path data_dir;

  ChatSettings chat;
  PromptSetting setting = PromptSetting::question;
  DisambiguationMode disambiguation_mode = DisambiguationMode::improved;
  ProviderMode provider = ProviderMode::replay;
  std::size_t parallelism = 4;
  std::size_t context_budget = kDefaultContextBudget;
  std::size_t few_shot = kDefaultFewShot;
  std::size_t search_limit = kDefaultSearchLimit;
  int infobox_depth = 2;
  std::string api_base = "https://api.openai.com";
  /// Live mode only: write caches into fixture_dir instead of cache_dir.
  bool record_fixtures = false;
};

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(std::string_view json_text);
/// The "config" member of a manifest written by run().
RunConfig config_from_manifest(const std::filesystem::path& manifest_path);

struct PipelineServices {
  ChatClient& chat;
  CandidateSource& candidates;
  PageSource& pages;
  const ImdbTable* imdb = nullptr;
};

struct PipelineOptions {
  PromptSetting setting = PromptSetting::question;
  DisambiguationMode mode = DisambiguationMode::improved;
  ChatSettings chat;
  std::size_t few_shot = kDefaultFewShot;
  std::size_t search_limit = kDefaultSearchLimit;
  std::size_t parallelism = 1;
  ContextOptions context;
  /// Replay runs abort on the first row error; live runs record it.
  bool abort_on_row_error = true;
};

/// Per-row diagnostics collected alongside the prediction.
struct RowTrace {
  std::vector<std::string> events;
  std::vector<std::string> context_titles;
  double probe_ms = 0.0;
  double context_ms = 0.0;
  double mapping_ms = 0.0;
};

class Pipeline {
 public:
  Pipeline(PipelineServices services, PipelineOptions options, const TemplateSet& templates,
           const ProfileTable& profiles, const LmSelectionTemplate& lm_template);

  /// Selects demonstrations for every relation in `queries` up front.
  /// Fails when the train split lacks rows for one of them.
  void prepare(std::span<const QueryRecord> queries, std::span<const GroundTruthRecord> train);

  PredictionRecord process(const QueryRecord& record, RowTrace& trace);

  /// Rows processed by a bounded worker pool; results in input order.
  std::vector<PredictionRecord> process_all(std::span<const QueryRecord> queries, std::vector<RowTrace>& traces);

 private:
  PredictionRecord probe(const QueryRecord& record, RowTrace& trace);

  PipelineServices services_;
  PipelineOptions options_;
  const TemplateSet& templates_;
  const ProfileTable& profiles_;
  const LmSelectionTemplate& lm_template_;
  std::map<RelationId, std::vector<FewShotExample>> examples_;
};

struct RunResult {
  std::vector<PredictionRecord> predictions;
  std::optional<EvaluationReport> report;
  std::string manifest_json;
};

/// End-to-end run. Writes predictions.jsonl, events.jsonl, manifest.json
/// and, with truth, report.json and report.txt under output_dir.
RunResult run(const RunConfig& config);

}  // namespace llmke
