// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/dataset.hpp"
#include "llmke/http.hpp"
#include "llmke/llm_client.hpp"
#include "llmke/prompting.hpp"

namespace llmke {

/// One wbsearchentities hit. `rank` is the position in the API result.
struct Candidate {
  std::string qid;
  std::string label;
  std::string description;
  std::vector<std::string> aliases;
  std::size_t rank = 0;

  bool operator==(const Candidate&) const = default;
};

enum class MappingError { no_candidates, surface_ambiguity_unresolved };
std::string_view to_string(MappingError error);
std::optional<MappingError> parse_mapping_error(std::string_view name);

/// Result of linking one object string. `resolved_qid` is absent exactly
/// when error_class is no_candidates. An LM fallback keeps the baseline QID
/// and is flagged surface_ambiguity_unresolved. Numeric relations carry the
/// canonical number in resolved_qid with strategy none.
struct MappingOutcome {
  std::string object_label;
  std::optional<std::string> resolved_qid;
  DisambiguationStrategy strategy_used = DisambiguationStrategy::baseline;
  std::size_t candidate_count = 0;
  std::optional<MappingError> error_class;

  bool operator==(const MappingOutcome&) const = default;
};

inline constexpr std::size_t kDefaultSearchLimit = 10;

class CandidateSource {
 public:
  virtual ~CandidateSource() = default;
  /// Candidates in API order with ranks 0..n-1. Empty label is a
  /// precondition violation (ConfigError).
  virtual std::vector<Candidate> search(std::string_view label, std::size_t limit) = 0;
};

/// Live wbsearchentities (English) with wbgetentities backfill for hits
/// that arrive without a description.
class WikidataSearch : public CandidateSource {
 public:
  explicit WikidataSearch(HttpTransport& transport,
                          std::string endpoint = "https://www.wikidata.org/w/api.php");
  std::vector<Candidate> search(std::string_view label, std::size_t limit) override;

  static std::vector<Candidate> parse_search_body(std::string_view body);

 private:
  void backfill(std::vector<Candidate>& candidates);

  HttpTransport& transport_;
  std::string endpoint_;
};

/// On-disk candidate cache keyed by (label, limit); JSONL of
/// {"label", "limit", "candidates": [...]}. Doubles as the replay fixture.
class CandidateStore {
 public:
  CandidateStore() = default;
  CandidateStore(CandidateStore&& other) noexcept : entries_(std::move(other.entries_)) {}
  static CandidateStore load_or_empty(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<std::vector<Candidate>> find(std::string_view label, std::size_t limit) const;
  void put(std::string_view label, std::size_t limit, std::vector<Candidate> candidates);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::size_t>, std::vector<Candidate>> entries_;
};

/// Store-first lookup. Without an upstream a store miss is a missing fixture.
class CachedCandidateSource : public CandidateSource {
 public:
  CachedCandidateSource(CandidateStore& store, CandidateSource* upstream)
      : store_(store), upstream_(upstream) {}
  std::vector<Candidate> search(std::string_view label, std::size_t limit) override;

 private:
  CandidateStore& store_;
  CandidateSource* upstream_;
};

std::optional<std::string> disambiguate_baseline(std::span<const Candidate> candidates);

/// Override table first (case-insensitive label), otherwise baseline.
std::optional<std::string> disambiguate_case(std::string_view label, const RelationProfile& profile,
                                             std::span<const Candidate> candidates);

/// Lowest-rank candidate whose description contains a keyword
/// (case-insensitive); otherwise baseline.
std::optional<std::string> disambiguate_keyword(std::span<const Candidate> candidates,
                                                std::span<const std::string> keywords);

/// Prompt text for LM-based selection; `{query}`, `{object_label}` and
/// `{candidates}` are substituted.
class LmSelectionTemplate {
 public:
  static LmSelectionTemplate load(const std::filesystem::path& path);
  static const LmSelectionTemplate& shipped();
  explicit LmSelectionTemplate(std::string text) : text_(std::move(text)) {}

  std::string render(std::string_view query_text, std::string_view object_label,
                     std::span<const Candidate> candidates) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// JSON object text mapping "label (QID)" to description, in rank order.
std::string candidate_dictionary(std::span<const Candidate> candidates);

/// First Q-number token in `reply` that names one of the candidates.
std::optional<std::string> pick_candidate_qid(std::string_view reply, std::span<const Candidate> candidates);

struct LmSelection {
  std::optional<std::string> qid;
  bool fell_back = false;
  int model_calls = 0;
};

/// Asks the model to choose among candidates. One candidate needs no call.
/// An invalid reply gets one corrective follow-up; a second invalid reply
/// falls back to baseline.
LmSelection disambiguate_lm(const QueryRecord& query, std::string_view query_text, std::string_view object_label,
                            std::span<const Candidate> candidates, ChatClient& llm, const ChatSettings& settings,
                            const LmSelectionTemplate& lm_template = LmSelectionTemplate::shipped());

enum class DisambiguationMode { baseline, improved };
std::string_view to_string(DisambiguationMode mode);
std::optional<DisambiguationMode> parse_disambiguation_mode(std::string_view name);

/// Strategy the mapper will apply for a profile under a mode.
DisambiguationStrategy effective_strategy(const RelationProfile& profile, DisambiguationMode mode);

class EntityMapper {
 public:
  EntityMapper(CandidateSource& candidates, DisambiguationMode mode, ChatClient* llm = nullptr,
               ChatSettings settings = {}, std::size_t search_limit = kDefaultSearchLimit,
               const TemplateSet& templates = TemplateSet::shipped(),
               const LmSelectionTemplate& lm_template = LmSelectionTemplate::shipped());

  /// One outcome per label, same order.
  std::vector<MappingOutcome> map_objects(std::span<const std::string> labels, const QueryRecord& record,
                                          const RelationProfile& profile);

 private:
  CandidateSource& candidates_;
  DisambiguationMode mode_;
  ChatClient* llm_;
  ChatSettings settings_;
  std::size_t search_limit_;
  const TemplateSet& templates_;
  const LmSelectionTemplate& lm_template_;
};

}  // namespace llmke
