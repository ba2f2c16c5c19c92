// SPDX-License-Identifier: Apache-2.0

#include "llmke/entity_mapping.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <mutex>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;

constexpr std::string_view kCorrection = "Reply with exactly one QID from the dictionary above.";

json candidate_json(const Candidate& candidate) {
  return {{"qid", candidate.qid},
          {"label", candidate.label},
          {"description", candidate.description},
          {"aliases", candidate.aliases}};
}

std::vector<Candidate> candidates_from_json(const json& list) {
  std::vector<Candidate> out;
  for (const auto& entry : list) {
    Candidate candidate;
    candidate.qid = entry.at("qid").get<std::string>();
    candidate.label = entry.value("label", "");
    candidate.description = entry.value("description", "");
    candidate.aliases = entry.value("aliases", std::vector<std::string>{});
    candidate.rank = out.size();
    if (!is_qid(candidate.qid)) throw DataError("candidate id \"" + candidate.qid + "\" is not a QID");
    out.push_back(std::move(candidate));
  }
  return out;
}

std::string lm_tag(const QueryRecord& query, std::string_view label, int attempt) {
  return "disambiguate|" + query.subject_qid + "|" + std::string(to_string(query.relation)) + "|" +
         std::string(label) + "|" + std::to_string(attempt);
}

}  // namespace

std::string_view to_string(MappingError error) {
  return error == MappingError::no_candidates ? "no_candidates" : "surface_ambiguity_unresolved";
}

std::optional<MappingError> parse_mapping_error(std::string_view name) {
  if (name == "no_candidates") return MappingError::no_candidates;
  if (name == "surface_ambiguity_unresolved") return MappingError::surface_ambiguity_unresolved;
  return std::nullopt;
}

std::string_view to_string(DisambiguationMode mode) {
  return mode == DisambiguationMode::baseline ? "baseline" : "improved";
}

std::optional<DisambiguationMode> parse_disambiguation_mode(std::string_view name) {
  if (name == "baseline") return DisambiguationMode::baseline;
  if (name == "improved") return DisambiguationMode::improved;
  return std::nullopt;
}

WikidataSearch::WikidataSearch(HttpTransport& transport, std::string endpoint)
    : transport_(transport), endpoint_(std::move(endpoint)) {}

std::vector<Candidate> WikidataSearch::parse_search_body(std::string_view body) {
  std::vector<Candidate> out;
  try {
    const json parsed = json::parse(body);
    if (parsed.contains("error")) {
      throw TransportError("wbsearchentities error: " + parsed.at("error").dump());
    }
    for (const auto& hit : parsed.value("search", json::array())) {
      Candidate candidate;
      candidate.qid = hit.at("id").get<std::string>();
      if (!is_qid(candidate.qid)) continue;
      candidate.label = hit.value("label", "");
      candidate.description = hit.value("description", "");
      candidate.aliases = hit.value("aliases", std::vector<std::string>{});
      candidate.rank = out.size();
      out.push_back(std::move(candidate));
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed wbsearchentities body: ") + e.what());
  }
  return out;
}

std::vector<Candidate> WikidataSearch::search(std::string_view label, std::size_t limit) {
  if (trim(label).empty()) throw ConfigError("candidate search with an empty label");
  HttpRequest request;
  request.url = endpoint_;
  request.query = {{"action", "wbsearchentities"}, {"search", std::string(label)},
                   {"language", "en"},             {"uselang", "en"},
                   {"type", "item"},               {"limit", std::to_string(limit)},
                   {"format", "json"}};
  const HttpResponse response = transport_.send(request);
  if (response.status != 200) {
    throw TransportError("wbsearchentities returned HTTP " + std::to_string(response.status), response.status);
  }
  auto candidates = parse_search_body(response.body);
  backfill(candidates);
  return candidates;
}

void WikidataSearch::backfill(std::vector<Candidate>& candidates) {
  std::string ids;
  for (const auto& candidate : candidates) {
    if (!candidate.description.empty()) continue;
    if (!ids.empty()) ids += '|';
    ids += candidate.qid;
  }
  if (ids.empty()) return;

  HttpRequest request;
  request.url = endpoint_;
  request.query = {{"action", "wbgetentities"}, {"ids", ids},     {"props", "labels|descriptions|aliases"},
                   {"languages", "en"},         {"format", "json"}};
  const HttpResponse response = transport_.send(request);
  if (response.status != 200) return;
  try {
    const json entities = json::parse(response.body).value("entities", json::object());
    for (auto& candidate : candidates) {
      const auto it = entities.find(candidate.qid);
      if (it == entities.end()) continue;
      if (candidate.description.empty()) {
        candidate.description = it->value("/descriptions/en/value"_json_pointer, "");
      }
      if (candidate.aliases.empty() && it->contains("aliases") && it->at("aliases").contains("en")) {
        for (const auto& alias : it->at("aliases").at("en")) candidate.aliases.push_back(alias.value("value", ""));
      }
    }
  } catch (const json::exception&) {
    // descriptions are optional enrichment
  }
}

CandidateStore CandidateStore::load_or_empty(const std::filesystem::path& path) {
  CandidateStore store;
  if (!std::filesystem::exists(path)) return store;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      const json entry = json::parse(line.text);
      store.put(entry.at("label").get<std::string>(), entry.at("limit").get<std::size_t>(),
                candidates_from_json(entry.at("candidates")));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return store;
}

void CandidateStore::save(const std::filesystem::path& path) const {
  std::string out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [key, candidates] : entries_) {
      nlohmann::ordered_json line;
      line["label"] = key.first;
      line["limit"] = key.second;
      line["candidates"] = nlohmann::ordered_json::array();
      for (const auto& candidate : candidates) line["candidates"].push_back(nlohmann::ordered_json(candidate_json(candidate)));
      out += line.dump(-1, ' ', false, json::error_handler_t::replace);
      out += '\n';
    }
  }
  write_file(path, out);
}

std::optional<std::vector<Candidate>> CandidateStore::find(std::string_view label, std::size_t limit) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({std::string(label), limit});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CandidateStore::put(std::string_view label, std::size_t limit, std::vector<Candidate> candidates) {
  std::unique_lock lock(mutex_);
  entries_[{std::string(label), limit}] = std::move(candidates);
}

std::size_t CandidateStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<Candidate> CachedCandidateSource::search(std::string_view label, std::size_t limit) {
  if (trim(label).empty()) throw ConfigError("candidate search with an empty label");
  if (auto hit = store_.find(label, limit)) return std::move(*hit);
  if (upstream_ == nullptr) {
    throw MissingFixtureError("no recorded candidates for \"" + std::string(label) + "\" (limit " +
                                  std::to_string(limit) + ")",
                              std::string(label));
  }
  auto candidates = upstream_->search(label, limit);
  store_.put(label, limit, candidates);
  return candidates;
}

std::optional<std::string> disambiguate_baseline(std::span<const Candidate> candidates) {
  if (candidates.empty()) return std::nullopt;
  const auto first = std::min_element(candidates.begin(), candidates.end(),
                                      [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return first->qid;
}

std::optional<std::string> disambiguate_case(std::string_view label, const RelationProfile& profile,
                                             std::span<const Candidate> candidates) {
  const auto it = profile.case_overrides.find(to_lower(trim(label)));
  if (it != profile.case_overrides.end()) return it->second;
  return disambiguate_baseline(candidates);
}

std::optional<std::string> disambiguate_keyword(std::span<const Candidate> candidates,
                                                std::span<const std::string> keywords) {
  const Candidate* best = nullptr;
  for (const auto& candidate : candidates) {
    const bool matches = std::any_of(keywords.begin(), keywords.end(), [&](const std::string& keyword) {
      return !keyword.empty() && icontains(candidate.description, keyword);
    });
    if (matches && (best == nullptr || candidate.rank < best->rank)) best = &candidate;
  }
  if (best != nullptr) return best->qid;
  return disambiguate_baseline(candidates);
}

LmSelectionTemplate LmSelectionTemplate::load(const std::filesystem::path& path) {
  return LmSelectionTemplate(read_file(path));
}

const LmSelectionTemplate& LmSelectionTemplate::shipped() {
  static const LmSelectionTemplate lm_template = load(default_data_dir() / "lm_disambiguation.txt");
  return lm_template;
}

std::string LmSelectionTemplate::render(std::string_view query_text, std::string_view object_label,
                                        std::span<const Candidate> candidates) const {
  std::string text = trim(text_);
  // substitute the dictionary last so candidate text is never re-scanned
  text = replace_all(std::move(text), "{query}", query_text);
  text = replace_all(std::move(text), "{object_label}", object_label);
  return replace_all(std::move(text), "{candidates}", candidate_dictionary(candidates));
}

std::string candidate_dictionary(std::span<const Candidate> candidates) {
  nlohmann::ordered_json dictionary = nlohmann::ordered_json::object();
  std::vector<const Candidate*> ordered;
  for (const auto& candidate : candidates) ordered.push_back(&candidate);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
  for (const auto* candidate : ordered) {
    dictionary[candidate->label + " (" + candidate->qid + ")"] = candidate->description;
  }
  return dictionary.dump(2, ' ', false, json::error_handler_t::replace);
}

std::optional<std::string> pick_candidate_qid(std::string_view reply, std::span<const Candidate> candidates) {
  std::size_t i = 0;
  while (i < reply.size()) {
    if (reply[i] == 'Q' && (i == 0 || std::isalnum(static_cast<unsigned char>(reply[i - 1])) == 0)) {
      std::size_t end = i + 1;
      while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end])) != 0) ++end;
      const bool bounded = end == reply.size() || std::isalnum(static_cast<unsigned char>(reply[end])) == 0;
      if (end > i + 1 && bounded) {
        const std::string_view token = reply.substr(i, end - i);
        for (const auto& candidate : candidates) {
          if (candidate.qid == token) return candidate.qid;
        }
      }
      i = end;
    } else {
      ++i;
    }
  }
  return std::nullopt;
}

LmSelection disambiguate_lm(const QueryRecord& query, std::string_view query_text, std::string_view object_label,
                            std::span<const Candidate> candidates, ChatClient& llm, const ChatSettings& settings,
                            const LmSelectionTemplate& lm_template) {
  LmSelection selection;
  if (candidates.size() <= 1) {
    selection.qid = disambiguate_baseline(candidates);
    return selection;
  }

  std::vector<Message> messages{{Role::user, lm_template.render(query_text, object_label, candidates)}};
  for (int attempt = 1; attempt <= 2; ++attempt) {
    const ChatResponse response = llm.complete(settings.make_request(messages, lm_tag(query, object_label, attempt)));
    ++selection.model_calls;
    if (auto qid = pick_candidate_qid(response.text, candidates)) {
      selection.qid = std::move(qid);
      return selection;
    }
    messages.push_back({Role::assistant, response.text});
    messages.push_back({Role::user, std::string(kCorrection)});
  }
  selection.qid = disambiguate_baseline(candidates);
  selection.fell_back = true;
  return selection;
}

DisambiguationStrategy effective_strategy(const RelationProfile& profile, DisambiguationMode mode) {
  if (profile.value_kind == ValueKind::numeric) return DisambiguationStrategy::none;
  if (mode == DisambiguationMode::baseline) return DisambiguationStrategy::baseline;
  return profile.disambiguation;
}

EntityMapper::EntityMapper(CandidateSource& candidates, DisambiguationMode mode, ChatClient* llm,
                           ChatSettings settings, std::size_t search_limit, const TemplateSet& templates,
                           const LmSelectionTemplate& lm_template)
    : candidates_(candidates),
      mode_(mode),
      llm_(llm),
      settings_(std::move(settings)),
      search_limit_(search_limit),
      templates_(templates),
      lm_template_(lm_template) {}

std::vector<MappingOutcome> EntityMapper::map_objects(std::span<const std::string> labels,
                                                      const QueryRecord& record, const RelationProfile& profile) {
  const DisambiguationStrategy strategy = effective_strategy(profile, mode_);
  std::vector<MappingOutcome> outcomes;
  outcomes.reserve(labels.size());

  for (const auto& label : labels) {
    MappingOutcome outcome;
    outcome.object_label = label;
    outcome.strategy_used = strategy;

    if (strategy == DisambiguationStrategy::none) {
      std::string number = normalize_number(label);
      if (number.empty()) {
        outcome.error_class = MappingError::no_candidates;
      } else {
        outcome.resolved_qid = std::move(number);
      }
      outcomes.push_back(std::move(outcome));
      continue;
    }

    const std::vector<Candidate> candidates =
        trim(label).empty() ? std::vector<Candidate>{} : candidates_.search(label, search_limit_);
    outcome.candidate_count = candidates.size();

    switch (strategy) {
      case DisambiguationStrategy::baseline:
        outcome.resolved_qid = disambiguate_baseline(candidates);
        break;
      case DisambiguationStrategy::case_based: {
        outcome.resolved_qid = disambiguate_case(label, profile, candidates);
        break;
      }
      case DisambiguationStrategy::keyword:
        outcome.resolved_qid = disambiguate_keyword(candidates, profile.keyword_terms);
        break;
      case DisambiguationStrategy::lm: {
        if (candidates.size() > 1 && llm_ == nullptr) {
          throw ConfigError("LM disambiguation for " + std::string(to_string(record.relation)) +
                            " needs a chat client");
        }
        const std::string query_text = templates_.render_question(record.relation, record.subject_label);
        LmSelection selection = candidates.size() > 1
                                    ? disambiguate_lm(record, query_text, label, candidates, *llm_, settings_,
                                                      lm_template_)
                                    : LmSelection{disambiguate_baseline(candidates), false, 0};
        outcome.resolved_qid = std::move(selection.qid);
        if (selection.fell_back) outcome.error_class = MappingError::surface_ambiguity_unresolved;
        break;
      }
      case DisambiguationStrategy::none:
        break;
    }
    if (!outcome.resolved_qid) outcome.error_class = MappingError::no_candidates;
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace llmke
