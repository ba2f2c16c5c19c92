// SPDX-License-Identifier: Apache-2.0

#include "llmke/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <mutex>
#include <set>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;

constexpr std::size_t kMaxObjects = 20;

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 2> kValueKinds = {"entity", "numeric"};
constexpr std::array<std::string_view, 5> kStrategies = {"baseline", "case", "keyword", "lm", "none"};
constexpr std::array<std::string_view, 4> kPolicies = {"wikipedia_default", "wikipedia_admin_division",
                                                       "wikipedia_plus_imdb", "none"};

const std::set<std::string, std::less<>> kProfileKeys = {
    "value_kind", "nullable", "disambiguation", "keywords", "case_overrides", "context", "pid", "object_class"};

std::string require_string(const json& object, const char* key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_string()) {
    throw DataError(where + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

RelationProfile parse_profile(RelationId relation, const json& entry) {
  const std::string where = "relation config " + std::string(to_string(relation));
  if (!entry.is_object()) throw DataError(where + ": expected an object");
  for (const auto& [key, value] : entry.items()) {
    if (!kProfileKeys.contains(key)) throw DataError(where + ": unknown key \"" + key + "\"");
  }

  RelationProfile profile;
  profile.relation = relation;

  const auto kind = lookup<ValueKind>(kValueKinds, require_string(entry, "value_kind", where));
  if (!kind) throw DataError(where + ": bad value_kind");
  profile.value_kind = *kind;

  const auto strategy = parse_strategy(require_string(entry, "disambiguation", where));
  if (!strategy) throw DataError(where + ": bad disambiguation");
  profile.disambiguation = *strategy;

  const auto policy = lookup<ContextPolicy>(kPolicies, require_string(entry, "context", where));
  if (!policy) throw DataError(where + ": bad context");
  profile.context_policy = *policy;

  const json& nullable = entry.value("nullable", json("unknown"));
  if (nullable.is_boolean()) {
    profile.nullable = nullable.get<bool>() ? Nullability::yes : Nullability::no;
  } else if (nullable == "unknown") {
    profile.nullable = Nullability::unknown;
  } else {
    throw DataError(where + ": nullable must be true, false or \"unknown\"");
  }

  if (entry.contains("keywords")) {
    profile.keyword_terms = entry.at("keywords").get<std::vector<std::string>>();
  }
  if (entry.contains("case_overrides")) {
    for (const auto& [label, qid] : entry.at("case_overrides").items()) {
      const auto value = qid.get<std::string>();
      if (!is_qid(value)) throw DataError(where + ": override for \"" + label + "\" is not a QID");
      profile.case_overrides[to_lower(label)] = value;
    }
  }
  profile.pid = entry.value("pid", "");
  profile.object_class = entry.value("object_class", "");

  // numeric relations are never linked
  if ((profile.value_kind == ValueKind::numeric) != (profile.disambiguation == DisambiguationStrategy::none)) {
    throw DataError(where + ": numeric value_kind requires disambiguation \"none\" and vice versa");
  }
  if (profile.disambiguation == DisambiguationStrategy::keyword && profile.keyword_terms.empty()) {
    throw DataError(where + ": keyword strategy needs a non-empty keywords list");
  }
  return profile;
}

json parse_json_line(std::string_view line, const std::string& where) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(where + ": invalid JSON (" + e.what() + ")");
  }
}

std::vector<std::string> string_list(const json& object, const char* key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) throw DataError(where + ": missing \"" + key + "\"");
  if (!it->is_array()) throw DataError(where + ": \"" + key + "\" must be a list");
  std::vector<std::string> out;
  for (const auto& element : *it) {
    if (element.is_string()) {
      out.push_back(element.get<std::string>());
    } else if (element.is_number_integer()) {
      out.push_back(std::to_string(element.get<long long>()));
    } else {
      throw DataError(where + ": \"" + key + "\" must hold strings");
    }
  }
  return out;
}

bool is_empty_marker(const std::vector<std::string>& values) {
  return values.empty() || (values.size() == 1 && trim(values.front()).empty());
}

}  // namespace

std::string_view to_string(ValueKind kind) { return kValueKinds[static_cast<std::size_t>(kind)]; }
std::string_view to_string(DisambiguationStrategy strategy) {
  return kStrategies[static_cast<std::size_t>(strategy)];
}
std::string_view to_string(ContextPolicy policy) { return kPolicies[static_cast<std::size_t>(policy)]; }
std::optional<DisambiguationStrategy> parse_strategy(std::string_view name) {
  return lookup<DisambiguationStrategy>(kStrategies, name);
}

ProfileTable ProfileTable::parse(std::string_view text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("relation config: ") + e.what());
  }
  if (!root.is_object()) throw DataError("relation config: expected a JSON object");

  ProfileTable table;
  table.profiles_.resize(kRelationCount);
  for (const auto& [name, entry] : root.items()) {
    if (!parse_relation(name)) throw DataError("relation config: unknown relation \"" + name + "\"");
  }
  for (const RelationId relation : all_relations()) {
    const auto it = root.find(std::string(to_string(relation)));
    if (it == root.end()) {
      throw DataError("relation config: missing relation " + std::string(to_string(relation)));
    }
    table.profiles_[static_cast<std::size_t>(relation)] = parse_profile(relation, *it);
  }
  return table;
}

ProfileTable ProfileTable::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const ProfileTable& ProfileTable::shipped() {
  static const ProfileTable table = load(default_data_dir() / "relations.jsonc");
  return table;
}

const RelationProfile& relation_profile(RelationId relation) { return ProfileTable::shipped().profile(relation); }

QueryRecord parse_query_line(std::string_view line, const std::string& where) {
  const json object = parse_json_line(line, where);
  if (!object.is_object()) throw DataError(where + ": expected a JSON object");

  QueryRecord record;
  record.subject_label = require_string(object, "SubjectEntity", where);
  record.subject_qid = require_string(object, "SubjectEntityID", where);
  if (!is_qid(record.subject_qid)) {
    throw DataError(where + ": SubjectEntityID \"" + record.subject_qid + "\" does not match Q[0-9]+");
  }
  const std::string relation = require_string(object, "Relation", where);
  const auto parsed = parse_relation(relation);
  if (!parsed) throw DataError(where + ": unknown relation \"" + relation + "\"");
  record.relation = *parsed;
  return record;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  std::vector<QueryRecord> records;
  for (const auto& line : read_jsonl_lines(path)) {
    records.push_back(parse_query_line(line.text, path.string() + ":" + std::to_string(line.number)));
  }
  return records;
}

std::vector<GroundTruthRecord> load_truth(const std::filesystem::path& path, const ProfileTable& table) {
  std::vector<GroundTruthRecord> records;
  for (const auto& line : read_jsonl_lines(path)) {
    const std::string where = path.string() + ":" + std::to_string(line.number);
    GroundTruthRecord record;
    record.query = parse_query_line(line.text, where);
    const json object = json::parse(line.text);
    auto labels = string_list(object, "ObjectEntities", where);
    auto ids = string_list(object, "ObjectEntitiesID", where);

    if (is_empty_marker(labels) && is_empty_marker(ids)) {
      labels.clear();
      ids.clear();
    }
    if (labels.size() != ids.size()) {
      throw DataError(where + ": ObjectEntities and ObjectEntitiesID differ in length");
    }
    if (ids.size() > kMaxObjects) {
      throw DataError(where + ": " + std::to_string(ids.size()) + " objects exceeds the maximum of 20");
    }

    const bool numeric = table.profile(record.query.relation).value_kind == ValueKind::numeric;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (numeric) {
        const std::string value = normalize_number(ids[i]);
        if (value.empty()) throw DataError(where + ": numeric object \"" + ids[i] + "\" has no digits");
        ids[i] = value;
        labels[i] = value;
      } else {
        std::string id = trim(ids[i]);
        if (!id.empty() && (id.front() == 'q')) id.front() = 'Q';
        if (!is_qid(id)) throw DataError(where + ": object id \"" + ids[i] + "\" is not a QID");
        ids[i] = id;
      }
    }
    record.object_labels = std::move(labels);
    record.object_ids = std::move(ids);
    records.push_back(std::move(record));
  }
  return records;
}

std::string render_truth_jsonl(const std::vector<GroundTruthRecord>& rows) {
  std::string out;
  for (const auto& row : rows) {
    nlohmann::ordered_json line;
    line["SubjectEntity"] = row.query.subject_label;
    line["SubjectEntityID"] = row.query.subject_qid;
    line["Relation"] = to_string(row.query.relation);
    line["ObjectEntities"] = row.object_labels;
    line["ObjectEntitiesID"] = row.object_ids;
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace llmke
