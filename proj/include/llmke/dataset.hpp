// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/relation.hpp"

namespace llmke {

/// One (subject, relation) task row.
struct QueryRecord {
  std::string subject_label;
  std::string subject_qid;
  RelationId relation{};

  bool operator==(const QueryRecord&) const = default;
};

/// A query plus its object lists. object_labels and object_ids are
/// index-aligned; "no object" is the pair of empty lists.
struct GroundTruthRecord {
  QueryRecord query;
  std::vector<std::string> object_labels;
  std::vector<std::string> object_ids;

  bool operator==(const GroundTruthRecord&) const = default;
};

enum class ValueKind { entity, numeric };
enum class Nullability { no, yes, unknown };
enum class DisambiguationStrategy { baseline, case_based, keyword, lm, none };
enum class ContextPolicy { wikipedia_default, wikipedia_admin_division, wikipedia_plus_imdb, none };

std::string_view to_string(ValueKind kind);
std::string_view to_string(DisambiguationStrategy strategy);
std::string_view to_string(ContextPolicy policy);
std::optional<DisambiguationStrategy> parse_strategy(std::string_view name);

struct RelationProfile {
  RelationId relation{};
  Nullability nullable = Nullability::unknown;
  ValueKind value_kind = ValueKind::entity;
  DisambiguationStrategy disambiguation = DisambiguationStrategy::baseline;
  std::vector<std::string> keyword_terms;
  /// Keys are lowercased labels.
  std::map<std::string, std::string> case_overrides;
  ContextPolicy context_policy = ContextPolicy::wikipedia_default;
  /// Wikidata property for the audit query, and an optional object class.
  std::string pid;
  std::string object_class;

  bool known_nullable() const { return nullable == Nullability::yes; }
};

/// Static per-relation metadata, loaded once from the relation config.
class ProfileTable {
 public:
  /// Parses and validates a relation config (JSON with comments).
  static ProfileTable parse(std::string_view text);
  static ProfileTable load(const std::filesystem::path& path);

  /// The table shipped in the default data directory, loaded on first use.
  static const ProfileTable& shipped();

  const RelationProfile& profile(RelationId relation) const {
    return profiles_[static_cast<std::size_t>(relation)];
  }

 private:
  std::vector<RelationProfile> profiles_;
};

/// Profile from the shipped table.
const RelationProfile& relation_profile(RelationId relation);

/// Query rows: only the three key fields are read; extra keys are ignored.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);

/// Truth rows. Enforces parallel lists and the 0..20 object count; maps
/// [""] to empty lists, uppercases QIDs and canonicalizes numeric values.
std::vector<GroundTruthRecord> load_truth(const std::filesystem::path& path,
                                          const ProfileTable& table = ProfileTable::shipped());

/// Parses one challenge-format line. `line_context` prefixes error messages.
QueryRecord parse_query_line(std::string_view line, const std::string& line_context);

/// Serializes truth rows in challenge format (one object per line).
std::string render_truth_jsonl(const std::vector<GroundTruthRecord>& rows);

}  // namespace llmke
