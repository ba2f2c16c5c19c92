// SPDX-License-Identifier: Apache-2.0

#include "llmke/prompting.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 3> kSettings = {"question", "triple", "context"};
constexpr std::array<std::string_view, 3> kRoles = {"system", "user", "assistant"};

constexpr std::string_view kContextLead = "Given the context: ";
constexpr std::string_view kContextJoin = ", compared and combined with the previous predictions, ";

/// Numeric part of a QID for ordering; non-QIDs sort last.
std::pair<std::size_t, std::string> qid_order(const std::string& qid) {
  if (!is_qid(qid)) return {std::string::npos, qid};
  return {qid.size(), qid};
}

Prompt assemble(const QueryRecord& record, PromptSetting setting, std::span<const FewShotExample> examples,
                std::string target) {
  Prompt prompt;
  prompt.setting = setting;
  prompt.relation = record.relation;
  prompt.subject_label = record.subject_label;
  for (const auto& example : examples) {
    prompt.messages.push_back({Role::user, example.query_text});
    prompt.messages.push_back({Role::assistant, example.answer_text});
  }
  prompt.messages.push_back({Role::user, std::move(target)});
  return prompt;
}

void append_utf8(std::string& out, unsigned long code) {
  if (code < 0x80) {
    out.push_back(static_cast<char>(code));
  } else if (code < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (code >> 6)));
    out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
  } else if (code < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (code >> 12)));
    out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (code >> 18)));
    out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
  }
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::size_t skip_space(std::string_view s, std::size_t i) {
  while (i < s.size() && is_space(s[i])) ++i;
  return i;
}

struct ListScan {
  std::vector<std::string> elements;
  bool any_quoted = false;
};

/// Reads a quoted element starting at s[i] (the opening quote). A quote
/// only closes the element when the next non-space character ends it, so
/// apostrophes inside single-quoted names survive.
std::optional<std::string> scan_quoted(std::string_view s, std::size_t& i) {
  const char quote = s[i++];
  std::string out;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      const char next = s[i + 1];
      if (next == 'u' && i + 5 < s.size()) {
        const std::string hex(s.substr(i + 2, 4));
        if (std::all_of(hex.begin(), hex.end(), [](unsigned char h) { return std::isxdigit(h) != 0; })) {
          append_utf8(out, std::stoul(hex, nullptr, 16));
          i += 6;
          continue;
        }
      }
      out.push_back(next == 'n' || next == 't' ? ' ' : next);
      i += 2;
      continue;
    }
    if (c == quote) {
      const std::size_t after = skip_space(s, i + 1);
      if (after >= s.size() || s[after] == ',' || s[after] == ']') {
        i = i + 1;
        return out;
      }
    }
    out.push_back(c);
    ++i;
  }
  return std::nullopt;
}

/// Parses a list literal whose '[' sits at `open`.
std::optional<ListScan> scan_list(std::string_view s, std::size_t open) {
  ListScan scan;
  std::size_t i = skip_space(s, open + 1);
  if (i < s.size() && s[i] == ']') return scan;

  while (i < s.size()) {
    i = skip_space(s, i);
    if (i >= s.size()) return std::nullopt;
    if (s[i] == ']') return scan;  // trailing comma
    if (s[i] == '"' || s[i] == '\'') {
      auto element = scan_quoted(s, i);
      if (!element) return std::nullopt;
      scan.elements.push_back(std::move(*element));
      scan.any_quoted = true;
    } else {
      const std::size_t start = i;
      while (i < s.size() && s[i] != ',' && s[i] != ']') {
        if (s[i] == '[' || s[i] == '"' || s[i] == '\'' || s[i] == '\n') return std::nullopt;
        ++i;
      }
      scan.elements.push_back(std::string(s.substr(start, i - start)));
    }
    i = skip_space(s, i);
    if (i >= s.size()) return std::nullopt;
    if (s[i] == ']') return scan;
    if (s[i] != ',') return std::nullopt;
    ++i;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(PromptSetting setting) { return kSettings[static_cast<std::size_t>(setting)]; }
std::optional<PromptSetting> parse_setting(std::string_view name) {
  for (std::size_t i = 0; i < kSettings.size(); ++i) {
    if (kSettings[i] == name) return static_cast<PromptSetting>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Role role) { return kRoles[static_cast<std::size_t>(role)]; }
std::optional<Role> parse_role(std::string_view name) {
  for (std::size_t i = 0; i < kRoles.size(); ++i) {
    if (kRoles[i] == name) return static_cast<Role>(i);
  }
  return std::nullopt;
}

TemplateSet TemplateSet::parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("templates: ") + e.what());
  }
  TemplateSet set;
  set.templates_.resize(kRelationCount);
  for (const auto& [name, text] : root.items()) {
    const auto relation = parse_relation(name);
    if (!relation) throw DataError("templates: unknown relation \"" + name + "\"");
    if (!text.is_string()) throw DataError("templates: " + name + " must be a string");
    set.templates_[index(*relation)] = text.get<std::string>();
  }
  for (const RelationId relation : all_relations()) {
    const auto& text = set.templates_[index(relation)];
    if (text.find(kSubjectSlot) == std::string::npos) {
      throw DataError("templates: " + std::string(to_string(relation)) + " is missing or has no subject slot");
    }
    if (text.find("? ") == std::string::npos) {
      throw DataError("templates: " + std::string(to_string(relation)) + " does not start with a question");
    }
  }
  set.checksum_ = sha256_hex(json_text);
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const TemplateSet& TemplateSet::shipped() {
  static const TemplateSet set = load(default_data_dir() / "templates.json");
  return set;
}

std::string TemplateSet::render_question(RelationId relation, std::string_view subject_label) const {
  return replace_all(raw(relation), kSubjectSlot, subject_label);
}

std::string TemplateSet::instructions(RelationId relation) const {
  const std::string& text = raw(relation);
  // the slot may sit inside the question, so search after it
  const std::size_t slot = text.find(kSubjectSlot);
  const std::size_t mark = text.find("? ", slot + kSubjectSlot.size());
  return text.substr(mark + 2);
}

std::string build_triple_query(const QueryRecord& record, const TemplateSet& templates) {
  if (trim(record.subject_label).empty()) {
    throw ConfigError("triple prompt for " + record.subject_qid + ": empty subject label");
  }
  return record.subject_label + ", " + std::string(to_string(record.relation)) + ": " +
         templates.instructions(record.relation);
}

Prompt build_question_prompt(const QueryRecord& record, std::span<const FewShotExample> examples,
                             const TemplateSet& templates) {
  return assemble(record, PromptSetting::question, examples,
                  templates.render_question(record.relation, record.subject_label));
}

Prompt build_triple_prompt(const QueryRecord& record, std::span<const FewShotExample> examples,
                           const TemplateSet& templates) {
  return assemble(record, PromptSetting::triple, examples, build_triple_query(record, templates));
}

Prompt build_context_followup_prompt(const Prompt& step_one, std::string_view context_text,
                                     std::string_view prior_answer_text, const TemplateSet& templates) {
  Prompt prompt = step_one;
  prompt.setting = PromptSetting::context;
  prompt.messages.push_back({Role::assistant, std::string(prior_answer_text)});

  const std::string question = templates.render_question(step_one.relation, step_one.subject_label);
  if (trim(context_text).empty()) {
    prompt.messages.push_back({Role::user, question});
  } else {
    std::string text(kContextLead);
    text += context_text;
    text += kContextJoin;
    text += question;
    prompt.messages.push_back({Role::user, std::move(text)});
  }
  return prompt;
}

std::vector<FewShotExample> select_few_shot(std::span<const GroundTruthRecord> train, RelationId relation,
                                            std::size_t k, PromptSetting setting, const TemplateSet& templates,
                                            const ProfileTable& profiles) {
  if (k == 0) return {};

  std::vector<const GroundTruthRecord*> rows;
  for (const auto& row : train) {
    if (row.query.relation == relation) rows.push_back(&row);
  }
  if (rows.size() < k) {
    throw ConfigError("few-shot selection for " + std::string(to_string(relation)) + ": need " +
                      std::to_string(k) + " train rows, found " + std::to_string(rows.size()));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return qid_order(a->query.subject_qid) < qid_order(b->query.subject_qid);
  });

  std::vector<const GroundTruthRecord*> chosen(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
  if (profiles.profile(relation).known_nullable()) {
    const auto is_empty = [](const auto* row) { return row->object_labels.empty(); };
    if (std::none_of(chosen.begin(), chosen.end(), is_empty)) {
      const auto empty = std::find_if(rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(), is_empty);
      if (empty != rows.end()) chosen.back() = *empty;
    }
  }

  std::vector<FewShotExample> examples;
  for (const auto* row : chosen) {
    FewShotExample example;
    example.subject_label = row->query.subject_label;
    example.query_text = setting == PromptSetting::triple ? build_triple_query(row->query, templates)
                                                          : templates.render_question(relation, row->query.subject_label);
    example.answer_text = render_object_list(row->object_labels);
    examples.push_back(std::move(example));
  }
  return examples;
}

ParsedObjectList parse_object_list(std::string_view raw) noexcept {
  ParsedObjectList result;
  try {
    result.raw = std::string(raw);
    std::optional<ListScan> bare;
    std::optional<ListScan> found;
    for (std::size_t open = raw.find('['); open != std::string_view::npos; open = raw.find('[', open + 1)) {
      auto scan = scan_list(raw, open);
      if (!scan) continue;
      if (scan->any_quoted || scan->elements.empty()) {
        found = std::move(scan);
        break;
      }
      if (!bare) bare = std::move(scan);
    }
    if (!found) found = std::move(bare);
    if (!found) {
      result.failed = true;
      return result;
    }
    for (auto& element : found->elements) {
      std::string value = trim(element);
      if (!value.empty()) result.objects.push_back(std::move(value));
    }
  } catch (...) {
    result.objects.clear();
    result.failed = true;
  }
  return result;
}

std::string render_object_list(std::span<const std::string> objects) {
  if (objects.empty()) return "[\"\"]";
  std::string out = "[";
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i > 0) out += ", ";
    out += '"';
    for (const char c : objects[i]) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  }
  out += ']';
  return out;
}

std::vector<std::string> normalize_numeric_objects(std::span<const std::string> objects) {
  std::vector<std::string> out;
  for (const auto& object : objects) {
    std::string value = normalize_number(object);
    if (!value.empty()) out.push_back(std::move(value));
  }
  return out;
}

}  // namespace llmke
