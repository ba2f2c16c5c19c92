// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmke/dataset.hpp"
#include "llmke/http.hpp"

namespace llmke {

/// Lead section of a Wikipedia article.
struct WikiPage {
  bool found = false;
  /// Title after redirects.
  std::string title;
  /// Plain-text introduction.
  std::string intro;
  /// Raw wikitext of section 0 (holds the Infobox).
  std::string lead_wikitext;

  bool operator==(const WikiPage&) const = default;
};

class PageSource {
 public:
  virtual ~PageSource() = default;
  virtual WikiPage fetch(std::string_view title) = 0;
  /// Top hit of the site's title search.
  virtual std::optional<std::string> search_title(std::string_view query) = 0;
};

/// English Wikipedia action API.
class WikipediaApi : public PageSource {
 public:
  explicit WikipediaApi(HttpTransport& transport, std::string endpoint = "https://en.wikipedia.org/w/api.php");
  WikiPage fetch(std::string_view title) override;
  std::optional<std::string> search_title(std::string_view query) override;

 private:
  HttpTransport& transport_;
  std::string endpoint_;
};

/// On-disk page cache keyed by (source, title). JSONL records:
///   {"source":"wikipedia","title":..,"found":..,"resolved_title":..,"intro":..,"wikitext":..}
///   {"source":"wikipedia-search","title":..,"result":.. | null}
class PageStore {
 public:
  PageStore() = default;
  PageStore(PageStore&& other) noexcept
      : pages_(std::move(other.pages_)), searches_(std::move(other.searches_)) {}
  static PageStore load_or_empty(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<WikiPage> find_page(std::string_view title) const;
  void put_page(std::string_view title, const WikiPage& page);
  /// Outer optional: cached or not. Inner: the search result.
  std::optional<std::optional<std::string>> find_search(std::string_view query) const;
  void put_search(std::string_view query, std::optional<std::string> result);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, WikiPage, std::less<>> pages_;
  std::map<std::string, std::optional<std::string>, std::less<>> searches_;
};

/// Store-first page access; without an upstream a miss is a missing fixture.
class CachedPageSource : public PageSource {
 public:
  CachedPageSource(PageStore& store, PageSource* upstream) : store_(store), upstream_(upstream) {}
  WikiPage fetch(std::string_view title) override;
  std::optional<std::string> search_title(std::string_view query) override;

 private:
  PageStore& store_;
  PageSource* upstream_;
};

struct InfoboxOptions {
  /// Nested templates up to this depth are flattened to their positional
  /// arguments; deeper ones are dropped.
  int template_depth = 2;
};

using InfoboxFields = std::vector<std::pair<std::string, std::string>>;

/// Flat key/value pairs of the first {{Infobox ...}} template, in source
/// order. Links are reduced to their display text; refs, comments and
/// markup are stripped. Unbalanced markup yields the pairs seen so far and
/// a warning.
InfoboxFields parse_infobox(std::string_view wikitext, const InfoboxOptions& options = {},
                            std::vector<std::string>* warnings = nullptr);

/// JSON object text preserving field order.
std::string infobox_to_json(const InfoboxFields& fields);

/// Intro of `title` ("" when the page is missing).
std::string fetch_wikipedia_intro(PageSource& source, std::string_view title);

/// Infobox of `title` as a JSON object string ("{}" when absent).
std::string fetch_infobox(PageSource& source, std::string_view title, const InfoboxOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);

/// Episode counts keyed by subject QID; JSONL of {"subject_qid", "episode_count"}.
class ImdbTable {
 public:
  static ImdbTable load_or_empty(const std::filesystem::path& path);
  std::optional<std::int64_t> episode_count(std::string_view subject_qid) const;
  void put(std::string subject_qid, std::int64_t count) { counts_[std::move(subject_qid)] = count; }

 private:
  std::map<std::string, std::int64_t, std::less<>> counts_;
};

struct ExtraSource {
  std::string label;
  std::string text;

  bool operator==(const ExtraSource&) const = default;
};

struct ContextBundle {
  std::string intro_text;
  /// JSON object text; "{}" when no Infobox was found.
  std::string infobox_json = "{}";
  std::optional<ExtraSource> extra_source;
  std::vector<std::string> source_titles;
  bool truncated = false;

  std::string render() const;
  bool empty() const { return intro_text.empty() && infobox_json == "{}" && !extra_source; }
};

inline constexpr std::size_t kDefaultContextBudget = 6000;

struct ContextOptions {
  /// Upper bound on render().size(), in bytes.
  std::size_t budget = kDefaultContextBudget;
  InfoboxOptions infobox;
};

/// Cuts a bundle down to the budget: intro tail first, then the extra
/// source, then trailing Infobox fields.
void fit_to_budget(ContextBundle& bundle, std::size_t budget);

class ContextAssembler {
 public:
  ContextAssembler(PageSource& pages, const ImdbTable* imdb, ContextOptions options = {});

  ContextBundle assemble(const QueryRecord& record, const RelationProfile& profile,
                         std::vector<std::string>* warnings = nullptr);

 private:
  /// Page by subject label, falling back to the top title-search hit.
  WikiPage resolve(std::string_view title);

  PageSource& pages_;
  const ImdbTable* imdb_;
  ContextOptions options_;
};

}  // namespace llmke
