// SPDX-License-Identifier: Apache-2.0

#include "llmke/gap_audit.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kEntityPrefix = "http://www.wikidata.org/entity/";

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

ordered_json ids_json(const IdSet& ids) {
  ordered_json out = ordered_json::array();
  for (const auto& id : ids) out.push_back(id);
  return out;
}

}  // namespace

std::string_view to_string(GapClass gap) {
  switch (gap) {
    case GapClass::aligned:
      return "aligned";
    case GapClass::model_gap:
      return "model_gap";
    case GapClass::kb_gap_candidate:
      return "kb_gap_candidate";
  }
  return "aligned";
}

TruthStore TruthStore::load_or_empty(const std::filesystem::path& path) {
  TruthStore store;
  if (!std::filesystem::exists(path)) return store;
  for (const auto& line : read_jsonl_lines(path)) {
    const std::string where = path.string() + ":" + std::to_string(line.number);
    try {
      const json entry = json::parse(line.text);
      const std::string name = entry.at("relation").get<std::string>();
      const auto relation = parse_relation(name);
      if (!relation) throw DataError("unknown relation \"" + name + "\"");
      Entry value;
      for (const auto& id : entry.at("ids")) value.ids.insert(id.get<std::string>());
      value.fetched_at = entry.value("fetched_at", "");
      store.put(entry.at("subject_qid").get<std::string>(), *relation, std::move(value));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return store;
}

void TruthStore::save(const std::filesystem::path& path) const {
  std::string out;
  std::shared_lock lock(mutex_);
  for (const auto& [key, entry] : entries_) {
    ordered_json line;
    line["subject_qid"] = key.first;
    line["relation"] = to_string(key.second);
    line["ids"] = ids_json(entry.ids);
    line["fetched_at"] = entry.fetched_at;
    out += line.dump() + "\n";
  }
  write_file(path, out);
}

std::optional<TruthStore::Entry> TruthStore::find(std::string_view subject_qid, RelationId relation) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({std::string(subject_qid), relation});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void TruthStore::put(std::string subject_qid, RelationId relation, Entry entry) {
  std::unique_lock lock(mutex_);
  entries_[{std::move(subject_qid), relation}] = std::move(entry);
}

IdSet CachedTruthSource::fetch(std::string_view subject_qid, RelationId relation) {
  if (auto entry = store_.find(subject_qid, relation)) return entry->ids;
  if (upstream_ == nullptr) {
    const std::string key = std::string(subject_qid) + "|" + std::string(to_string(relation));
    throw MissingFixtureError("no recorded Wikidata truth for " + key, key);
  }
  IdSet ids = upstream_->fetch(subject_qid, relation);
  store_.put(std::string(subject_qid), relation, {ids, utc_now()});
  return ids;
}

std::string build_truth_query(std::string_view query_template, std::string_view subject_qid,
                              const RelationProfile& profile) {
  if (profile.pid.empty()) {
    throw ConfigError("relation " + std::string(to_string(profile.relation)) + " has no Wikidata property");
  }
  if (!is_qid(subject_qid)) throw ConfigError("subject \"" + std::string(subject_qid) + "\" is not a QID");
  std::string filter;
  if (!profile.object_class.empty()) filter = "?o wdt:P31/wdt:P279* wd:" + profile.object_class + " .";
  std::string query = replace_all(std::string(query_template), "{subject}", subject_qid);
  query = replace_all(std::move(query), "{pid}", profile.pid);
  return replace_all(std::move(query), "{class_filter}", filter);
}

IdSet parse_sparql_objects(std::string_view body, ValueKind kind) {
  IdSet out;
  try {
    const json parsed = json::parse(body);
    for (const auto& binding : parsed.at("results").at("bindings")) {
      if (!binding.contains("o")) continue;
      const std::string value = binding.at("o").at("value").get<std::string>();
      if (kind == ValueKind::numeric) {
        std::string number = normalize_number(value);
        if (!number.empty()) out.insert(std::move(number));
      } else if (value.rfind(kEntityPrefix, 0) == 0) {
        std::string qid = value.substr(kEntityPrefix.size());
        if (is_qid(qid)) out.insert(std::move(qid));
      }
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed SPARQL result: ") + e.what());
  }
  return out;
}

SparqlTruthSource::SparqlTruthSource(HttpTransport& transport, std::string query_template,
                                     const ProfileTable& profiles, std::string endpoint)
    : transport_(transport),
      query_template_(std::move(query_template)),
      profiles_(profiles),
      endpoint_(std::move(endpoint)) {}

std::string SparqlTruthSource::run_query(const std::string& query) {
  HttpRequest request;
  request.url = endpoint_;
  request.query = {{"query", query}, {"format", "json"}};
  request.headers["Accept"] = "application/sparql-results+json";
  const HttpResponse response = transport_.send(request);
  if (response.status != 200) {
    throw TransportError("SPARQL endpoint returned HTTP " + std::to_string(response.status), response.status);
  }
  return response.body;
}

IdSet SparqlTruthSource::fetch(std::string_view subject_qid, RelationId relation) {
  const RelationProfile& profile = profiles_.profile(relation);
  return parse_sparql_objects(run_query(build_truth_query(query_template_, subject_qid, profile)),
                              profile.value_kind);
}

std::vector<std::string> SparqlTruthSource::validate_property_types(std::string_view type_query_template) {
  std::vector<std::string> mismatched;
  std::map<std::string, std::string> type_by_pid;
  for (const RelationId relation : all_relations()) {
    const RelationProfile& profile = profiles_.profile(relation);
    if (profile.pid.empty()) {
      mismatched.push_back(std::string(to_string(relation)) + ": no property configured");
      continue;
    }
    auto it = type_by_pid.find(profile.pid);
    if (it == type_by_pid.end()) {
      const std::string body = run_query(replace_all(std::string(type_query_template), "{pid}", profile.pid));
      std::string type;
      try {
        const json bindings = json::parse(body).at("results").at("bindings");
        if (!bindings.empty()) type = bindings.at(0).at("type").at("value").get<std::string>();
      } catch (const json::exception& e) {
        throw TransportError(std::string("malformed SPARQL result: ") + e.what());
      }
      it = type_by_pid.emplace(profile.pid, type).first;
    }
    const std::string expected = profile.value_kind == ValueKind::numeric ? "Quantity" : "WikibaseItem";
    const std::string& type = it->second;
    const auto hash = type.rfind('#');
    const std::string actual = hash == std::string::npos ? type : type.substr(hash + 1);
    if (actual != expected) {
      mismatched.push_back(std::string(to_string(relation)) + ": " + profile.pid + " is " +
                           (actual.empty() ? "unknown" : actual) + ", expected " + expected);
    }
  }
  return mismatched;
}

bool corroborated(std::span<const std::string> labels, std::string_view context_text) {
  bool any = false;
  for (const auto& label : labels) {
    const std::string text = trim(label);
    if (text.empty()) continue;
    if (!icontains(context_text, text)) return false;
    any = true;
  }
  return any;
}

std::vector<GapFinding> audit_gaps(std::span<const PredictionRecord> predictions, TruthSource& live_truth,
                                   const ContextLookup& context, const AuditThresholds& thresholds) {
  std::vector<GapFinding> findings;
  for (const auto& row : predictions) {
    GapFinding finding;
    finding.subject_qid = row.query.subject_qid;
    finding.subject_label = row.query.subject_label;
    finding.relation = row.query.relation;
    finding.predicted_ids = to_score_set(row.object_ids);
    finding.wikidata_ids = fetch_wikidata_truth(live_truth, row.query.subject_qid, row.query.relation);
    finding.divergence = 1.0 - row_scores(finding.predicted_ids, finding.wikidata_ids).f1;

    if (finding.divergence < thresholds.aligned_below) {
      finding.classification = GapClass::aligned;
    } else if (finding.divergence >= thresholds.kb_gap_at_least && context &&
               corroborated(row.object_labels, context(row))) {
      finding.classification = GapClass::kb_gap_candidate;
    } else {
      finding.classification = GapClass::model_gap;
    }
    findings.push_back(std::move(finding));
  }
  std::stable_sort(findings.begin(), findings.end(),
                   [](const GapFinding& a, const GapFinding& b) { return a.divergence > b.divergence; });
  return findings;
}

std::string findings_to_jsonl(std::span<const GapFinding> findings) {
  std::string out;
  for (const auto& finding : findings) {
    ordered_json line;
    line["subject_qid"] = finding.subject_qid;
    line["subject_label"] = finding.subject_label;
    line["relation"] = to_string(finding.relation);
    line["predicted_ids"] = ids_json(finding.predicted_ids);
    line["wikidata_ids"] = ids_json(finding.wikidata_ids);
    line["divergence"] = finding.divergence;
    line["classification"] = to_string(finding.classification);
    out += line.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

std::string findings_report(std::span<const GapFinding> findings) {
  std::map<GapClass, std::size_t> counts;
  for (const auto& finding : findings) ++counts[finding.classification];
  std::string out = "rows: " + std::to_string(findings.size()) + "\n";
  for (const GapClass gap : {GapClass::aligned, GapClass::model_gap, GapClass::kb_gap_candidate}) {
    out += std::string(to_string(gap)) + ": " + std::to_string(counts[gap]) + "\n";
  }
  bool header = false;
  for (const auto& finding : findings) {
    if (finding.classification != GapClass::kb_gap_candidate) continue;
    if (!header) {
      out += "\nknowledge-base gap candidates:\n";
      header = true;
    }
    char divergence[16];
    std::snprintf(divergence, sizeof divergence, "%.3f", finding.divergence);
    out += "  " + finding.subject_label + " (" + finding.subject_qid + ") " +
           std::string(to_string(finding.relation)) + " divergence " + divergence + " predicted [";
    bool first = true;
    for (const auto& id : finding.predicted_ids) {
      out += (first ? "" : ", ") + id;
      first = false;
    }
    out += "]\n";
  }
  return out;
}

}  // namespace llmke
