// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <json.hpp>

#include "fakes.hpp"
#include "llmke/common.hpp"
#include "llmke/context.hpp"

namespace llmke {
namespace {

using testing::MapPageSource;
using testing::QueueTransport;
using testing::TempDir;

std::string value_of(const InfoboxFields& fields, std::string_view key) {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return "<absent>";
}

TEST(Infobox, FlatFieldsInOrder) {
  const std::string text = R"({{Short description|Country in South America}}
{{Infobox country
| conventional_long_name = Federative Republic of [[Brazil]]
| capital = [[Brasília]]
| official_languages = [[Portuguese language|Portuguese]]
| population_estimate = 203,062,512<ref name="ibge">{{cite web|url=http://x|title=IBGE}}</ref>
}}
'''Brazil''' is a country.)";
  const auto fields = parse_infobox(text);
  ASSERT_EQ(fields.size(), 4u);
  EXPECT_EQ(fields[0].first, "conventional_long_name");
  EXPECT_EQ(fields[0].second, "Federative Republic of Brazil");
  EXPECT_EQ(value_of(fields, "official_languages"), "Portuguese");
  EXPECT_EQ(value_of(fields, "population_estimate"), "203,062,512");
  EXPECT_EQ(infobox_to_json(fields).find("conventional_long_name"), 2u);
}

TEST(Infobox, CaseInsensitiveNameAndNoInfobox) {
  EXPECT_EQ(value_of(parse_infobox("{{infobox person|name=Ada}}"), "name"), "Ada");
  EXPECT_EQ(value_of(parse_infobox("{{ Infobox_band |name=X}}"), "name"), "X");
  EXPECT_TRUE(parse_infobox("No templates here.").empty());
  EXPECT_TRUE(parse_infobox("{{Other|a=b}}").empty());
  EXPECT_EQ(infobox_to_json({}), "{}");
}

TEST(Infobox, NestedTemplatesFlatten) {
  const std::string text = R"({{Infobox musical artist
| members = {{plainlist|
* [[John Lennon]]
* [[Paul McCartney]]
}}
| spouse = {{marriage|[[Yoko Ono]]|1969}}
| genre = {{hlist|[[Rock music|Rock]]|pop}}
}})";
  const auto fields = parse_infobox(text);
  EXPECT_EQ(value_of(fields, "members"), "John Lennon, Paul McCartney");
  EXPECT_EQ(value_of(fields, "genre"), "Rock, pop");
  EXPECT_NE(value_of(fields, "spouse").find("Yoko Ono"), std::string::npos);
}

TEST(Infobox, DepthLimitDropsDeepTemplates) {
  const std::string text = "{{Infobox x\n| a = {{l1|{{l2|{{l3|deep}}}}}}\n| b = plain\n}}";
  const auto shallow = parse_infobox(text, {1});
  EXPECT_EQ(value_of(shallow, "a").find("deep"), std::string::npos);
  EXPECT_EQ(value_of(shallow, "b"), "plain");
  const auto deep = parse_infobox(text, {5});
  EXPECT_NE(value_of(deep, "a").find("deep"), std::string::npos);
}

TEST(Infobox, StripsMarkup) {
  const std::string text = "{{Infobox person\n"
                           "| image = [[File:Face.jpg|thumb|A face]]\n"
                           "| occupation = '''Physicist'''<br>chemist<!-- hidden -->\n"
                           "| website = [http://example.org Official site]\n"
                           "| known_for = <small>radioactivity</small>&nbsp;research\n"
                           "| empty =\n"
                           "[[Category:People]]\n"
                           "}}";
  const auto fields = parse_infobox(text);
  // fields that clean to nothing are dropped
  EXPECT_EQ(value_of(fields, "image"), "<absent>");
  EXPECT_EQ(value_of(fields, "empty"), "<absent>");
  EXPECT_EQ(value_of(fields, "occupation"), "Physicist, chemist");
  EXPECT_EQ(value_of(fields, "website"), "Official site");
  EXPECT_EQ(value_of(fields, "known_for"), "radioactivity research");
}

TEST(Infobox, PipesInsideLinksAndTemplatesDoNotSplit) {
  const auto fields = parse_infobox("{{Infobox x|a=[[B|C]]|d={{t|e|f}}|g=h}}");
  ASSERT_EQ(fields.size(), 3u);
  EXPECT_EQ(value_of(fields, "a"), "C");
  EXPECT_EQ(value_of(fields, "g"), "h");
}

TEST(Infobox, UnbalancedWarns) {
  std::vector<std::string> warnings;
  const auto fields = parse_infobox("{{Infobox x\n| a = 1\n| b = [[link", {}, &warnings);
  EXPECT_EQ(value_of(fields, "a"), "1");
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Infobox, NeverThrowsOnNoise) {
  const std::string alphabet = "{}[]|=<>!-*' \nInfobox";
  unsigned state = 3;
  for (int i = 0; i < 2000; ++i) {
    std::string text = "{{Infobox ";
    for (int n = 0; n < 60; ++n) {
      state = state * 1103515245u + 12345u;
      text.push_back(alphabet[(state >> 16) % alphabet.size()]);
    }
    EXPECT_NO_THROW(infobox_to_json(parse_infobox(text)));
  }
}

TEST(Bundle, RenderLines) {
  ContextBundle bundle;
  EXPECT_TRUE(bundle.empty());
  EXPECT_EQ(bundle.render(), "");
  bundle.intro_text = "Intro.";
  bundle.infobox_json = R"({"a":"b"})";
  bundle.extra_source = ExtraSource{"IMDb", "Number of episodes: 62"};
  EXPECT_EQ(bundle.render(),
            "Wikipedia introduction: Intro.\nWikipedia Infobox: {\"a\":\"b\"}\nIMDb: Number of episodes: 62");
}

TEST(Budget, TrimOrder) {
  ContextBundle bundle;
  bundle.intro_text = std::string(100, 'x');
  bundle.infobox_json = R"({"k1":"v1","k2":"v2"})";
  bundle.extra_source = ExtraSource{"E", std::string(50, 'y')};
  const std::size_t full = bundle.render().size();

  ContextBundle a = bundle;
  fit_to_budget(a, full - 10);
  EXPECT_TRUE(a.truncated);
  EXPECT_EQ(a.intro_text.size(), 90u);
  EXPECT_EQ(a.extra_source->text.size(), 50u);

  ContextBundle b = bundle;
  fit_to_budget(b, full - 130);
  EXPECT_TRUE(b.intro_text.empty());
  EXPECT_LT(b.extra_source->text.size(), 50u);
  EXPECT_EQ(b.infobox_json, R"({"k1":"v1","k2":"v2"})");
  EXPECT_LE(b.render().size(), full - 130);

  ContextBundle c = bundle;
  fit_to_budget(c, 30);
  EXPECT_LE(c.render().size(), 30u);
  EXPECT_EQ(c.infobox_json, R"({"k1":"v1"})");

  ContextBundle d = bundle;
  fit_to_budget(d, full);
  EXPECT_FALSE(d.truncated);
}

TEST(Budget, Utf8Safe) {
  ContextBundle bundle;
  bundle.intro_text = "ééééé";
  fit_to_budget(bundle, std::string("Wikipedia introduction: ").size() + 5);
  EXPECT_EQ(bundle.intro_text, "éé");
}

class AssemblerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    pages.pages["Brazil"] = {true, "Brazil", "Brazil is big.", "{{Infobox country|capital=[[Brasília]]}}"};
    pages.pages["United Kingdom"] = {true, "United Kingdom", "The UK.", ""};
    pages.pages["Administrative divisions of the United Kingdom"] = {
        true, "Administrative divisions of the United Kingdom", "England, Scotland, Wales and Northern Ireland.", ""};
    pages.searches["Administrative Division of United Kingdom"] = "Administrative divisions of the United Kingdom";
    pages.pages["Cinnabar (mineral)"] = {true, "Cinnabar (mineral)", "A mineral.", ""};
    pages.searches["cinnabar"] = "Cinnabar (mineral)";
    imdb.put("Q5", 62);
  }

  const RelationProfile& profile(RelationId relation) { return ProfileTable::shipped().profile(relation); }

  MapPageSource pages;
  ImdbTable imdb;
};

TEST_F(AssemblerTest, DefaultPolicy) {
  ContextAssembler assembler(pages, &imdb);
  const auto bundle = assembler.assemble({"Brazil", "Q155", RelationId::CountryBordersCountry},
                                         profile(RelationId::CountryBordersCountry));
  EXPECT_EQ(bundle.intro_text, "Brazil is big.");
  EXPECT_EQ(bundle.infobox_json, R"({"capital":"Brasília"})");
  EXPECT_FALSE(bundle.extra_source.has_value());
  EXPECT_EQ(bundle.source_titles, std::vector<std::string>{"Brazil"});
}

TEST_F(AssemblerTest, SearchFallback) {
  ContextAssembler assembler(pages, nullptr);
  const auto bundle =
      assembler.assemble({"cinnabar", "Q1", RelationId::CompoundHasParts}, profile(RelationId::CompoundHasParts));
  EXPECT_EQ(bundle.intro_text, "A mineral.");
}

TEST_F(AssemblerTest, MissingPageWarns) {
  ContextAssembler assembler(pages, nullptr);
  std::vector<std::string> warnings;
  const auto bundle = assembler.assemble({"Nowhere", "Q1", RelationId::CountryBordersCountry},
                                         profile(RelationId::CountryBordersCountry), &warnings);
  EXPECT_TRUE(bundle.empty());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST_F(AssemblerTest, AdminDivisionPolicy) {
  ContextAssembler assembler(pages, nullptr);
  const auto bundle = assembler.assemble({"United Kingdom", "Q145", RelationId::CountryHasStates},
                                         profile(RelationId::CountryHasStates));
  ASSERT_TRUE(bundle.extra_source.has_value());
  EXPECT_EQ(bundle.extra_source->label, "Administrative Division of United Kingdom");
  EXPECT_EQ(bundle.extra_source->text, "England, Scotland, Wales and Northern Ireland.");
  EXPECT_EQ(bundle.source_titles.size(), 2u);
}

TEST_F(AssemblerTest, ImdbPolicy) {
  ContextAssembler assembler(pages, &imdb);
  auto bundle = assembler.assemble({"Brazil", "Q5", RelationId::SeriesHasNumberOfEpisodes},
                                   profile(RelationId::SeriesHasNumberOfEpisodes));
  ASSERT_TRUE(bundle.extra_source.has_value());
  EXPECT_EQ(bundle.extra_source->text, "Number of episodes: 62");
  EXPECT_NE(bundle.render().find("IMDb: Number of episodes: 62"), std::string::npos);

  std::vector<std::string> warnings;
  bundle = assembler.assemble({"Brazil", "Q6", RelationId::SeriesHasNumberOfEpisodes},
                              profile(RelationId::SeriesHasNumberOfEpisodes), &warnings);
  EXPECT_FALSE(bundle.extra_source.has_value());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST_F(AssemblerTest, BudgetApplied) {
  pages.pages["Long"] = {true, "Long", std::string(10000, 'a'), ""};
  ContextAssembler assembler(pages, nullptr, {500, {}});
  const auto bundle =
      assembler.assemble({"Long", "Q1", RelationId::CountryBordersCountry}, profile(RelationId::CountryBordersCountry));
  EXPECT_TRUE(bundle.truncated);
  EXPECT_LE(bundle.render().size(), 500u);
}

TEST(PageStoreTest, RoundTripAndReplay) {
  TempDir dir;
  PageStore store;
  store.put_page("Brazil", {true, "Brazil", "intro", "{{Infobox x|a=b}}"});
  store.put_page("Missing", {});
  store.put_search("q", std::string("Brazil"));
  store.put_search("none", std::nullopt);
  const auto path = dir.path() / "pages.jsonl";
  store.save(path);
  PageStore loaded = PageStore::load_or_empty(path);
  EXPECT_EQ(loaded.find_page("Brazil"), store.find_page("Brazil"));
  EXPECT_FALSE(loaded.find_page("Missing")->found);
  EXPECT_EQ(loaded.find_search("q"), std::optional<std::optional<std::string>>(std::string("Brazil")));
  EXPECT_EQ(loaded.find_search("none"), std::optional<std::optional<std::string>>(std::in_place, std::nullopt));
  EXPECT_FALSE(loaded.find_search("other").has_value());

  CachedPageSource replay(loaded, nullptr);
  EXPECT_EQ(fetch_wikipedia_intro(replay, "Brazil"), "intro");
  EXPECT_EQ(fetch_infobox(replay, "Brazil"), R"({"a":"b"})");
  EXPECT_EQ(fetch_wikipedia_intro(replay, "Missing"), "");
  EXPECT_THROW(replay.fetch("Peru"), MissingFixtureError);
  EXPECT_THROW(replay.search_title("x"), MissingFixtureError);

  MapPageSource upstream;
  upstream.pages["Peru"] = {true, "Peru", "p", ""};
  CachedPageSource live(loaded, &upstream);
  EXPECT_EQ(live.fetch("Peru").intro, "p");
  EXPECT_TRUE(loaded.find_page("Peru").has_value());
}

TEST(WikipediaApiTest, FetchesIntroAndWikitext) {
  QueueTransport transport;
  transport.push(200, R"({"query":{"pages":[{"title":"Brazil","extract":"Brazil is big."}]}})");
  transport.push(200, R"({"parse":{"title":"Brazil","wikitext":"{{Infobox country|a=b}}"}})");
  transport.push(200, R"({"query":{"pages":[{"title":"Nope","missing":true}]}})");
  WikipediaApi api(transport);
  const auto page = api.fetch("Brazil");
  EXPECT_TRUE(page.found);
  EXPECT_EQ(page.intro, "Brazil is big.");
  EXPECT_EQ(page.lead_wikitext, "{{Infobox country|a=b}}");
  EXPECT_FALSE(api.fetch("Nope").found);

  transport.push(200, R"({"query":{"search":[{"title":"Cinnabar"}]}})");
  transport.push(200, R"({"query":{"search":[]}})");
  EXPECT_EQ(api.search_title("cinnabar"), "Cinnabar");
  EXPECT_FALSE(api.search_title("zzzz").has_value());
}

TEST(ImdbTableTest, Load) {
  TempDir dir;
  write_file(dir.path() / "imdb.jsonl", R"({"subject_qid":"Q5","episode_count":62})" "\n");
  const auto table = ImdbTable::load_or_empty(dir.path() / "imdb.jsonl");
  EXPECT_EQ(table.episode_count("Q5"), 62);
  EXPECT_FALSE(table.episode_count("Q6").has_value());
  EXPECT_FALSE(ImdbTable::load_or_empty(dir.path() / "none.jsonl").episode_count("Q5").has_value());
}

}  // namespace
}  // namespace llmke
