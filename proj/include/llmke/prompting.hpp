// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/dataset.hpp"

namespace llmke {

enum class PromptSetting { question, triple, context };
std::string_view to_string(PromptSetting setting);
std::optional<PromptSetting> parse_setting(std::string_view name);

enum class Role { system, user, assistant };
std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view name);

struct Message {
  Role role{};
  std::string text;

  bool operator==(const Message&) const = default;
};

struct Prompt {
  std::vector<Message> messages;
  PromptSetting setting{};
  RelationId relation{};
  std::string subject_label;

  /// Text of the final user turn.
  const std::string& target_text() const { return messages.back().text; }
};

/// A demonstration pair. `query_text` is already rendered for the setting
/// it was selected for; `answer_text` is a bracketed list literal.
struct FewShotExample {
  std::string subject_label;
  std::string query_text;
  std::string answer_text;

  bool operator==(const FewShotExample&) const = default;
};

/// Question templates, one per relation, with a `{subject_entity}` slot.
class TemplateSet {
 public:
  static TemplateSet parse(std::string_view json_text);
  static TemplateSet load(const std::filesystem::path& path);
  static const TemplateSet& shipped();

  const std::string& raw(RelationId relation) const { return templates_[index(relation)]; }

  /// Template with the subject spliced in as plain text.
  std::string render_question(RelationId relation, std::string_view subject_label) const;

  /// Everything after the leading question sentence: the relation-specific
  /// answer instructions followed by the list-format sentence.
  std::string instructions(RelationId relation) const;

  /// SHA-256 of the source text the set was parsed from.
  const std::string& checksum() const { return checksum_; }

 private:
  static std::size_t index(RelationId relation) { return static_cast<std::size_t>(relation); }

  std::vector<std::string> templates_;
  std::string checksum_;
};

inline constexpr std::string_view kSubjectSlot = "{subject_entity}";
inline constexpr std::size_t kDefaultFewShot = 3;

std::string build_triple_query(const QueryRecord& record, const TemplateSet& templates);

/// Few-shot turns (user query, assistant answer) followed by the target
/// question.
Prompt build_question_prompt(const QueryRecord& record, std::span<const FewShotExample> examples,
                             const TemplateSet& templates = TemplateSet::shipped());

/// Same packaging with an incomplete-triple target `"{subject}, {relation}: "`
/// plus the template's answer instructions. Rejects an empty subject label.
Prompt build_triple_prompt(const QueryRecord& record, std::span<const FewShotExample> examples,
                           const TemplateSet& templates = TemplateSet::shipped());

/// Second turn of the context exchange. Keeps the whole step-one
/// conversation, appends the step-one reply verbatim, then asks again with
/// the retrieved context. An empty context restates the question.
Prompt build_context_followup_prompt(const Prompt& step_one, std::string_view context_text,
                                     std::string_view prior_answer_text,
                                     const TemplateSet& templates = TemplateSet::shipped());

/// Deterministic demonstrations: rows of `relation` sorted by numeric QID,
/// first k taken; for relations known to be nullable the last slot goes to
/// the first empty-answer row when one exists outside the first k-1.
std::vector<FewShotExample> select_few_shot(std::span<const GroundTruthRecord> train, RelationId relation,
                                            std::size_t k = kDefaultFewShot,
                                            PromptSetting setting = PromptSetting::question,
                                            const TemplateSet& templates = TemplateSet::shipped(),
                                            const ProfileTable& profiles = ProfileTable::shipped());

/// Outcome of parsing a model reply. `failed` means no list literal was
/// found; `objects` is then empty and `raw` carries the reply.
struct ParsedObjectList {
  std::vector<std::string> objects;
  bool failed = false;
  std::string raw;
};

/// Extracts the first bracketed list literal from a free-form reply.
/// Never throws.
ParsedObjectList parse_object_list(std::string_view raw) noexcept;

/// Canonical `["a", "b"]` literal; the empty list renders as `[""]`.
std::string render_object_list(std::span<const std::string> objects);

/// Numeric relations: each element reduced to its canonical integer;
/// elements without digits are dropped.
std::vector<std::string> normalize_numeric_objects(std::span<const std::string> objects);

}  // namespace llmke
