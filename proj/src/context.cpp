// SPDX-License-Identifier: Apache-2.0

#include "llmke/context.hpp"

#include <json.hpp>

#include <algorithm>
#include <mutex>
#include <regex>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kAdminDivisionPrefix = "Administrative Division of ";
constexpr std::string_view kImdbLabel = "IMDb";

json get_json(HttpTransport& transport, const std::string& endpoint,
              std::vector<std::pair<std::string, std::string>> query) {
  HttpRequest request;
  request.url = endpoint;
  request.query = std::move(query);
  const HttpResponse response = transport.send(request);
  if (response.status != 200) {
    throw TransportError("Wikipedia API returned HTTP " + std::to_string(response.status), response.status);
  }
  try {
    return json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("malformed Wikipedia API body: ") + e.what());
  }
}

/// Index one past the "}}" closing the template opened at `open`, or npos.
std::size_t match_template(std::string_view text, std::size_t open) {
  int depth = 0;
  std::size_t i = open;
  while (i + 1 < text.size()) {
    if (text.compare(i, 4, "<!--") == 0) {
      const auto end = text.find("-->", i + 4);
      if (end == std::string_view::npos) return std::string_view::npos;
      i = end + 3;
      continue;
    }
    if (text[i] == '{' && text[i + 1] == '{') {
      ++depth;
      i += 2;
    } else if (text[i] == '}' && text[i + 1] == '}') {
      --depth;
      i += 2;
      if (depth == 0) return i;
    } else {
      ++i;
    }
  }
  return std::string_view::npos;
}

/// Splits on '|' outside nested templates and links.
std::vector<std::string> split_top_level(std::string_view body) {
  std::vector<std::string> parts;
  int templates = 0;
  int links = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const bool has_next = i + 1 < body.size();
    if (has_next && body[i] == '{' && body[i + 1] == '{') {
      ++templates;
      ++i;
    } else if (has_next && body[i] == '}' && body[i + 1] == '}') {
      templates = std::max(0, templates - 1);
      ++i;
    } else if (has_next && body[i] == '[' && body[i + 1] == '[') {
      ++links;
      ++i;
    } else if (has_next && body[i] == ']' && body[i + 1] == ']') {
      links = std::max(0, links - 1);
      ++i;
    } else if (body[i] == '|' && templates == 0 && links == 0) {
      parts.emplace_back(body.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.emplace_back(body.substr(start));
  return parts;
}

/// '=' at nesting depth zero, marking a named template argument.
std::size_t top_level_equals(std::string_view part) {
  int depth = 0;
  for (std::size_t i = 0; i < part.size(); ++i) {
    const char c = part[i];
    if (c == '{' || c == '[') ++depth;
    if (c == '}' || c == ']') --depth;
    if (c == '=' && depth == 0) return i;
  }
  return std::string_view::npos;
}

std::string clean_value(std::string_view raw, int depth);

std::string flatten_template(std::string_view inner, int depth) {
  auto parts = split_top_level(inner);
  std::vector<std::string> kept;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (top_level_equals(parts[i]) != std::string_view::npos) continue;
    std::string value = clean_value(parts[i], depth);
    if (!value.empty()) kept.push_back(std::move(value));
  }
  std::string out;
  for (const auto& value : kept) {
    if (!out.empty()) out += ", ";
    out += value;
  }
  return out;
}

std::string replace_templates(std::string_view text, int depth) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find("{{", i);
    if (open == std::string_view::npos) {
      out += text.substr(i);
      break;
    }
    out += text.substr(i, open - i);
    const auto close = match_template(text, open);
    if (close == std::string_view::npos) {
      // unbalanced: drop the rest of the value
      break;
    }
    if (depth > 0) {
      out += ' ';
      out += flatten_template(text.substr(open + 2, close - open - 4), depth - 1);
      out += ' ';
    }
    i = close;
  }
  return out;
}

std::string replace_links(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find("[[", i);
    if (open == std::string_view::npos) {
      out += text.substr(i);
      break;
    }
    out += text.substr(i, open - i);
    const auto close = text.find("]]", open + 2);
    if (close == std::string_view::npos) {
      out += text.substr(open + 2);
      break;
    }
    const std::string_view inner = text.substr(open + 2, close - open - 2);
    const std::string lower = to_lower(inner.substr(0, 9));
    if (lower.rfind("file:", 0) != 0 && lower.rfind("image:", 0) != 0 && lower.rfind("category:", 0) != 0) {
      const auto bar = inner.rfind('|');
      out += bar == std::string_view::npos ? inner : inner.substr(bar + 1);
    }
    i = close + 2;
  }
  return out;
}

std::string clean_value(std::string_view raw, int depth) {
  static const std::regex comment("<!--[\\s\\S]*?-->");
  static const std::regex ref_pair("<ref[^>/]*>[\\s\\S]*?</ref\\s*>", std::regex::icase);
  static const std::regex ref_single("<ref[^>]*/>", std::regex::icase);
  static const std::regex line_break("<br\\s*/?>", std::regex::icase);
  static const std::regex tag("<[^>]*>");
  static const std::regex external("\\[(?:https?:)?//[^\\s\\]]+\\s*([^\\]]*)\\]");
  static const std::regex bullet("(^|\\n)\\s*[*#]+\\s*");
  static const std::regex emphasis("'{2,}");
  static const std::regex spaces("\\s+");
  static const std::regex dangling_commas("(\\s*,)+\\s+");
  static const std::regex space_before_comma("\\s+,");

  std::string text(raw);
  text = std::regex_replace(text, comment, "");
  text = std::regex_replace(text, ref_pair, "");
  text = std::regex_replace(text, ref_single, "");
  text = std::regex_replace(text, line_break, ", ");
  text = std::regex_replace(text, bullet, "$1, ");
  text = replace_templates(text, depth);
  text = replace_links(text);
  text = std::regex_replace(text, external, "$1");
  text = std::regex_replace(text, tag, "");
  text = std::regex_replace(text, emphasis, "");
  text = replace_all(std::move(text), "&nbsp;", " ");
  text = std::regex_replace(text, spaces, " ");
  text = std::regex_replace(text, dangling_commas, ", ");
  text = std::regex_replace(text, space_before_comma, ",");
  text = trim(text);
  while (!text.empty() && (text.front() == ',' || text.front() == ' ')) text.erase(0, 1);
  while (!text.empty() && (text.back() == ',' || text.back() == ' ')) text.pop_back();
  return text;
}

/// Start of the first "{{Infobox" (any case, optional spaces), or npos.
std::size_t find_infobox(std::string_view wikitext) {
  const std::string lower = to_lower(wikitext);
  std::size_t pos = 0;
  while ((pos = lower.find("{{", pos)) != std::string::npos) {
    std::size_t name = pos + 2;
    while (name < lower.size() && (lower[name] == ' ' || lower[name] == '\n')) ++name;
    if (lower.compare(name, 7, "infobox") == 0) return pos;
    pos += 2;
  }
  return std::string::npos;
}

void cut_utf8(std::string& text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  text.resize(cut);
}

}  // namespace

WikipediaApi::WikipediaApi(HttpTransport& transport, std::string endpoint)
    : transport_(transport), endpoint_(std::move(endpoint)) {}

WikiPage WikipediaApi::fetch(std::string_view title) {
  WikiPage page;
  const json extract = get_json(transport_, endpoint_,
                                {{"action", "query"},
                                 {"prop", "extracts"},
                                 {"exintro", "1"},
                                 {"explaintext", "1"},
                                 {"redirects", "1"},
                                 {"titles", std::string(title)},
                                 {"format", "json"},
                                 {"formatversion", "2"}});
  const json pages = extract.value("/query/pages"_json_pointer, json::array());
  if (pages.empty() || pages.at(0).value("missing", false) || pages.at(0).value("invalid", false)) {
    return page;
  }
  page.found = true;
  page.title = pages.at(0).value("title", std::string(title));
  page.intro = trim(pages.at(0).value("extract", ""));

  const json parsed = get_json(transport_, endpoint_,
                               {{"action", "parse"},
                                {"page", page.title},
                                {"prop", "wikitext"},
                                {"section", "0"},
                                {"redirects", "1"},
                                {"format", "json"},
                                {"formatversion", "2"}});
  page.lead_wikitext = parsed.value("/parse/wikitext"_json_pointer, "");
  return page;
}

std::optional<std::string> WikipediaApi::search_title(std::string_view query) {
  const json result = get_json(transport_, endpoint_,
                               {{"action", "query"},
                                {"list", "search"},
                                {"srsearch", std::string(query)},
                                {"srlimit", "1"},
                                {"format", "json"},
                                {"formatversion", "2"}});
  const json hits = result.value("/query/search"_json_pointer, json::array());
  if (hits.empty()) return std::nullopt;
  return hits.at(0).value("title", "");
}

PageStore PageStore::load_or_empty(const std::filesystem::path& path) {
  PageStore store;
  if (!std::filesystem::exists(path)) return store;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      const json entry = json::parse(line.text);
      const std::string source = entry.at("source").get<std::string>();
      const std::string title = entry.at("title").get<std::string>();
      if (source == "wikipedia") {
        WikiPage page;
        page.found = entry.at("found").get<bool>();
        page.title = entry.value("resolved_title", "");
        page.intro = entry.value("intro", "");
        page.lead_wikitext = entry.value("wikitext", "");
        store.put_page(title, page);
      } else if (source == "wikipedia-search") {
        const json& result = entry.at("result");
        store.put_search(title, result.is_null() ? std::nullopt : std::optional(result.get<std::string>()));
      } else {
        throw DataError("unknown source \"" + source + "\"");
      }
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return store;
}

void PageStore::save(const std::filesystem::path& path) const {
  std::string out;
  std::shared_lock lock(mutex_);
  for (const auto& [title, page] : pages_) {
    ordered_json line;
    line["source"] = "wikipedia";
    line["title"] = title;
    line["found"] = page.found;
    line["resolved_title"] = page.title;
    line["intro"] = page.intro;
    line["wikitext"] = page.lead_wikitext;
    out += line.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  for (const auto& [query, result] : searches_) {
    ordered_json line;
    line["source"] = "wikipedia-search";
    line["title"] = query;
    line["result"] = result ? ordered_json(*result) : ordered_json(nullptr);
    out += line.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  write_file(path, out);
}

std::optional<WikiPage> PageStore::find_page(std::string_view title) const {
  std::shared_lock lock(mutex_);
  const auto it = pages_.find(title);
  if (it == pages_.end()) return std::nullopt;
  return it->second;
}

void PageStore::put_page(std::string_view title, const WikiPage& page) {
  std::unique_lock lock(mutex_);
  pages_[std::string(title)] = page;
}

std::optional<std::optional<std::string>> PageStore::find_search(std::string_view query) const {
  std::shared_lock lock(mutex_);
  const auto it = searches_.find(query);
  if (it == searches_.end()) return std::nullopt;
  return it->second;
}

void PageStore::put_search(std::string_view query, std::optional<std::string> result) {
  std::unique_lock lock(mutex_);
  searches_[std::string(query)] = std::move(result);
}

WikiPage CachedPageSource::fetch(std::string_view title) {
  if (auto page = store_.find_page(title)) return *page;
  if (upstream_ == nullptr) {
    throw MissingFixtureError("no recorded Wikipedia page \"" + std::string(title) + "\"", std::string(title));
  }
  WikiPage page = upstream_->fetch(title);
  store_.put_page(title, page);
  return page;
}

std::optional<std::string> CachedPageSource::search_title(std::string_view query) {
  if (auto hit = store_.find_search(query)) return *hit;
  if (upstream_ == nullptr) {
    throw MissingFixtureError("no recorded Wikipedia title search \"" + std::string(query) + "\"",
                              std::string(query));
  }
  auto result = upstream_->search_title(query);
  store_.put_search(query, result);
  return result;
}

InfoboxFields parse_infobox(std::string_view wikitext, const InfoboxOptions& options,
                            std::vector<std::string>* warnings) {
  InfoboxFields fields;
  const std::size_t open = find_infobox(wikitext);
  if (open == std::string_view::npos) return fields;

  std::size_t close = match_template(wikitext, open);
  std::string_view body;
  if (close == std::string_view::npos) {
    if (warnings != nullptr) warnings->push_back("unbalanced Infobox template; using text to end of section");
    body = wikitext.substr(open + 2);
  } else {
    body = wikitext.substr(open + 2, close - open - 4);
  }

  const auto parts = split_top_level(body);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(std::string_view(parts[i]).substr(0, eq));
    if (key.empty()) continue;
    std::string value = clean_value(std::string_view(parts[i]).substr(eq + 1), options.template_depth);
    if (value.empty()) continue;
    fields.emplace_back(std::move(key), std::move(value));
  }
  return fields;
}

std::string infobox_to_json(const InfoboxFields& fields) {
  ordered_json object = ordered_json::object();
  for (const auto& [key, value] : fields) object[key] = value;
  return object.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string fetch_wikipedia_intro(PageSource& source, std::string_view title) {
  const WikiPage page = source.fetch(title);
  return page.found ? page.intro : std::string();
}

std::string fetch_infobox(PageSource& source, std::string_view title, const InfoboxOptions& options,
                          std::vector<std::string>* warnings) {
  const WikiPage page = source.fetch(title);
  if (!page.found) return "{}";
  return infobox_to_json(parse_infobox(page.lead_wikitext, options, warnings));
}

ImdbTable ImdbTable::load_or_empty(const std::filesystem::path& path) {
  ImdbTable table;
  if (!std::filesystem::exists(path)) return table;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      const json entry = json::parse(line.text);
      table.put(entry.at("subject_qid").get<std::string>(), entry.at("episode_count").get<std::int64_t>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return table;
}

std::optional<std::int64_t> ImdbTable::episode_count(std::string_view subject_qid) const {
  const auto it = counts_.find(subject_qid);
  if (it == counts_.end()) return std::nullopt;
  return it->second;
}

std::string ContextBundle::render() const {
  std::vector<std::string> lines;
  if (!intro_text.empty()) lines.push_back("Wikipedia introduction: " + intro_text);
  if (infobox_json != "{}" && !infobox_json.empty()) lines.push_back("Wikipedia Infobox: " + infobox_json);
  if (extra_source && !extra_source->text.empty()) lines.push_back(extra_source->label + ": " + extra_source->text);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  return out;
}

void fit_to_budget(ContextBundle& bundle, std::size_t budget) {
  for (std::size_t size = bundle.render().size(); size > budget; size = bundle.render().size()) {
    bundle.truncated = true;
    const std::size_t excess = size - budget;
    if (!bundle.intro_text.empty()) {
      cut_utf8(bundle.intro_text, bundle.intro_text.size() > excess ? bundle.intro_text.size() - excess : 0);
      bundle.intro_text = trim(bundle.intro_text);
    } else if (bundle.extra_source && !bundle.extra_source->text.empty()) {
      auto& text = bundle.extra_source->text;
      cut_utf8(text, text.size() > excess ? text.size() - excess : 0);
    } else if (bundle.infobox_json != "{}") {
      ordered_json fields = ordered_json::parse(bundle.infobox_json);
      if (fields.empty()) {
        bundle.infobox_json = "{}";
      } else {
        fields.erase(std::prev(fields.end()).key());
        bundle.infobox_json = fields.dump(-1, ' ', false, json::error_handler_t::replace);
      }
    } else {
      break;
    }
  }
}

ContextAssembler::ContextAssembler(PageSource& pages, const ImdbTable* imdb, ContextOptions options)
    : pages_(pages), imdb_(imdb), options_(options) {}

WikiPage ContextAssembler::resolve(std::string_view title) {
  WikiPage page = pages_.fetch(title);
  if (page.found) return page;
  const auto top = pages_.search_title(title);
  if (top && !top->empty() && *top != title) return pages_.fetch(*top);
  return page;
}

ContextBundle ContextAssembler::assemble(const QueryRecord& record, const RelationProfile& profile,
                                         std::vector<std::string>* warnings) {
  ContextBundle bundle;
  if (profile.context_policy == ContextPolicy::none) return bundle;

  const WikiPage page = resolve(record.subject_label);
  bundle.source_titles.push_back(record.subject_label);
  if (page.found) {
    bundle.intro_text = page.intro;
    std::vector<std::string> infobox_warnings;
    bundle.infobox_json = infobox_to_json(parse_infobox(page.lead_wikitext, options_.infobox, &infobox_warnings));
    if (warnings != nullptr) {
      for (auto& warning : infobox_warnings) warnings->push_back(page.title + ": " + warning);
    }
  } else if (warnings != nullptr) {
    warnings->push_back("no Wikipedia page for \"" + record.subject_label + "\"");
  }

  if (profile.context_policy == ContextPolicy::wikipedia_admin_division) {
    const std::string title = std::string(kAdminDivisionPrefix) + record.subject_label;
    bundle.source_titles.push_back(title);
    const WikiPage divisions = resolve(title);
    if (divisions.found && !divisions.intro.empty()) {
      bundle.extra_source = ExtraSource{title, divisions.intro};
    } else if (warnings != nullptr) {
      warnings->push_back("no Wikipedia page for \"" + title + "\"");
    }
  } else if (profile.context_policy == ContextPolicy::wikipedia_plus_imdb) {
    bundle.source_titles.push_back(std::string(kImdbLabel));
    const auto count = imdb_ != nullptr ? imdb_->episode_count(record.subject_qid) : std::nullopt;
    if (count) {
      bundle.extra_source = ExtraSource{std::string(kImdbLabel), "Number of episodes: " + std::to_string(*count)};
    } else if (warnings != nullptr) {
      warnings->push_back("no IMDb snapshot entry for " + record.subject_qid);
    }
  }

  fit_to_budget(bundle, options_.budget);
  return bundle;
}

}  // namespace llmke
