// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "llmke/prompting.hpp"

namespace llmke {
namespace {

struct Case {
  const char* name;
  const char* reply;
  std::vector<std::string> objects;
  bool failed = false;
};

void PrintTo(const Case& c, std::ostream* os) { *os << c.name; }

const std::vector<Case>& corpus() {
  static const std::vector<Case> cases{
      {"plain_double", R"(["Peru", "Chile"])", {"Peru", "Chile"}},
      {"plain_single", R"(['Peru', 'Chile'])", {"Peru", "Chile"}},
      {"no_spaces", R"(["a","b","c"])", {"a", "b", "c"}},
      {"padded", "  [ \"a\" ,  \"b\" ]  ", {"a", "b"}},
      {"prose_before", R"(The answer is ["Paris"].)", {"Paris"}},
      {"prose_after", "[\"Paris\"]\nI hope this helps.", {"Paris"}},
      {"code_fence", "```python\n[\"Lennon\", \"McCartney\"]\n```", {"Lennon", "McCartney"}},
      {"multiline", "[\n  \"a\",\n  \"b\"\n]", {"a", "b"}},
      {"trailing_comma", R"(["a", "b",])", {"a", "b"}},
      {"empty_marker", R"([""])", {}},
      {"empty_list", "[]", {}},
      {"blank_entries", R"(["", "x", "  "])", {"x"}},
      {"apostrophe_in_single", R"(['Ngũgĩ wa Thiong'o', 'O'Brien'])", {"Ngũgĩ wa Thiong'o", "O'Brien"}},
      {"apostrophe_in_double", R"(["Ireland's Eye"])", {"Ireland's Eye"}},
      {"escaped_quote", R"(["The \"Boss\""])", {"The \"Boss\""}},
      {"unicode_escape", R"(["S\u00e3o Paulo"])", {"São Paulo"}},
      {"raw_utf8", R"(["Zürich", "Genève"])", {"Zürich", "Genève"}},
      {"mixed_quotes", R"(["a", 'b'])", {"a", "b"}},
      {"bare_numbers", "[62]", {"62"}},
      {"bare_words", "[Peru, Chile]", {"Peru", "Chile"}},
      {"quoted_preferred_over_bare", R"(See [1]. Answer: ["Peru"])", {"Peru"}},
      {"first_quoted_list_wins", R"(["a"] or maybe ["b"])", {"a"}},
      {"inner_comma", R"(["Washington, D.C."])", {"Washington, D.C."}},
      {"inner_bracket_text", R"(["Pierre [Curie]"])", {"Pierre [Curie]"}},
      {"whitespace_trimmed", R"([" Peru  "])", {"Peru"}},
      {"no_list", "I don't know.", {}, true},
      {"empty_reply", "", {}, true},
      {"unterminated", R"(["Peru", "Chile")", {}, true},
      {"unterminated_quote", R"(["Peru)", {}, true},
      {"only_open_bracket", "[", {}, true},
  };
  return cases;
}

class ParserCorpus : public ::testing::TestWithParam<Case> {};

TEST_P(ParserCorpus, Parses) {
  const Case& c = GetParam();
  const ParsedObjectList parsed = parse_object_list(c.reply);
  EXPECT_EQ(parsed.failed, c.failed);
  EXPECT_EQ(parsed.objects, c.objects);
  EXPECT_EQ(parsed.raw, c.reply);
}

INSTANTIATE_TEST_SUITE_P(Replies, ParserCorpus, ::testing::ValuesIn(corpus()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(ParserCorpus, CorpusIsLarge) { EXPECT_GE(corpus().size(), 20u); }

// Random byte soup must never throw and must keep the raw text.
TEST(ParserProperty, NeverThrowsOnNoise) {
  std::mt19937 rng(7);
  const std::string alphabet = "[]\"',\\ abcu0\n{}";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> length(0, 40);
  for (int i = 0; i < 2000; ++i) {
    std::string reply;
    for (int n = length(rng); n > 0; --n) reply.push_back(alphabet[pick(rng)]);
    const auto parsed = parse_object_list(reply);
    EXPECT_EQ(parsed.raw, reply);
    if (parsed.failed) EXPECT_TRUE(parsed.objects.empty());
  }
}

// render_object_list output parses back to the trimmed, non-empty input.
TEST(ParserProperty, RenderRoundTrip) {
  std::mt19937 rng(11);
  const std::string alphabet = "abc XYZ'\"\\,[]";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> length(1, 12);
  std::uniform_int_distribution<int> count(0, 5);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> objects;
    for (int n = count(rng); n > 0; --n) {
      std::string s;
      for (int m = length(rng); m > 0; --m) s.push_back(alphabet[pick(rng)]);
      const auto first = s.find_first_not_of(' ');
      const auto last = s.find_last_not_of(' ');
      if (first == std::string::npos) continue;
      objects.push_back(s.substr(first, last - first + 1));
    }
    const auto parsed = parse_object_list(render_object_list(objects));
    ASSERT_FALSE(parsed.failed) << render_object_list(objects);
    EXPECT_EQ(parsed.objects, objects) << render_object_list(objects);
  }
}

}  // namespace
}  // namespace llmke
