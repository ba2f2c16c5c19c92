// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/dataset.hpp"
#include "llmke/evaluation.hpp"
#include "llmke/http.hpp"
#include "llmke/prediction.hpp"

namespace llmke {

enum class GapClass { aligned, model_gap, kb_gap_candidate };
std::string_view to_string(GapClass gap);

struct GapFinding {
  std::string subject_qid;
  std::string subject_label;
  RelationId relation{};
  IdSet predicted_ids;
  IdSet wikidata_ids;
  /// 1 - row F1 over the two sets.
  double divergence = 0.0;
  GapClass classification = GapClass::aligned;
};

/// Current Wikidata objects of (subject, relation).
class TruthSource {
 public:
  virtual ~TruthSource() = default;
  virtual IdSet fetch(std::string_view subject_qid, RelationId relation) = 0;
};

/// Snapshot of fetched truth; JSONL of
/// {"subject_qid", "relation", "ids", "fetched_at"}. Also the SPARQL cache.
class TruthStore {
 public:
  struct Entry {
    IdSet ids;
    std::string fetched_at;
  };

  TruthStore() = default;
  TruthStore(TruthStore&& other) noexcept : entries_(std::move(other.entries_)) {}

  static TruthStore load_or_empty(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::optional<Entry> find(std::string_view subject_qid, RelationId relation) const;
  void put(std::string subject_qid, RelationId relation, Entry entry);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, RelationId>, Entry> entries_;
};

/// Store-first truth; a miss without an upstream is a missing fixture.
class CachedTruthSource : public TruthSource {
 public:
  CachedTruthSource(TruthStore& store, TruthSource* upstream) : store_(store), upstream_(upstream) {}
  IdSet fetch(std::string_view subject_qid, RelationId relation) override;

 private:
  TruthStore& store_;
  TruthSource* upstream_;
};

/// SELECT query for (subject, profile.pid), from data/sparql/truth.rq.
std::string build_truth_query(std::string_view query_template, std::string_view subject_qid,
                              const RelationProfile& profile);

/// Object values from a SPARQL JSON result: entity URIs become QIDs,
/// numeric literals become canonical integers.
IdSet parse_sparql_objects(std::string_view body, ValueKind kind);

/// Wikidata Query Service client.
class SparqlTruthSource : public TruthSource {
 public:
  SparqlTruthSource(HttpTransport& transport, std::string query_template,
                    const ProfileTable& profiles = ProfileTable::shipped(),
                    std::string endpoint = "https://query.wikidata.org/sparql");

  /// Throws ConfigError when the relation has no PID configured.
  IdSet fetch(std::string_view subject_qid, RelationId relation) override;

  /// Runs the property-type query for every PID and returns the relations
  /// whose property type disagrees with their value kind.
  std::vector<std::string> validate_property_types(std::string_view type_query_template);

 private:
  std::string run_query(const std::string& query);

  HttpTransport& transport_;
  std::string query_template_;
  const ProfileTable& profiles_;
  std::string endpoint_;
};

/// fetch_wikidata_truth in the pipeline vocabulary.
inline IdSet fetch_wikidata_truth(TruthSource& source, std::string_view subject_qid, RelationId relation) {
  return source.fetch(subject_qid, relation);
}

struct AuditThresholds {
  double aligned_below = 0.25;
  double kb_gap_at_least = 0.75;
};

/// Context text used for corroboration; may be empty.
using ContextLookup = std::function<std::string(const PredictionRecord&)>;

/// True when every predicted label occurs (case-insensitively) in the
/// context. An empty prediction is never corroborated.
bool corroborated(std::span<const std::string> labels, std::string_view context_text);

/// Findings sorted by divergence, descending; ties keep input order.
std::vector<GapFinding> audit_gaps(std::span<const PredictionRecord> predictions, TruthSource& live_truth,
                                   const ContextLookup& context = {}, const AuditThresholds& thresholds = {});

std::string findings_to_jsonl(std::span<const GapFinding> findings);
std::string findings_report(std::span<const GapFinding> findings);

}  // namespace llmke
