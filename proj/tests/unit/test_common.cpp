// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "llmke/common.hpp"
#include "llmke/relation.hpp"

namespace llmke {
namespace {

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(NormalizeNumber, Variants) {
  EXPECT_EQ(normalize_number("62"), "62");
  EXPECT_EQ(normalize_number(" 007 "), "7");
  EXPECT_EQ(normalize_number("0"), "0");
  EXPECT_EQ(normalize_number("236 episodes"), "236");
  EXPECT_EQ(normalize_number("about 1,234 in total"), "1234");
  EXPECT_EQ(normalize_number("1,23"), "1");
  EXPECT_EQ(normalize_number("two (2)"), "2");
  EXPECT_EQ(normalize_number("none"), "");
  EXPECT_EQ(normalize_number(""), "");
}

TEST(Strings, Helpers) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(to_lower("MeRcUrY"), "mercury");
  EXPECT_TRUE(icontains("Chemical ELEMENT", "element"));
  EXPECT_FALSE(icontains("planet", "element"));
  EXPECT_TRUE(is_qid("Q925"));
  EXPECT_FALSE(is_qid("q925"));
  EXPECT_FALSE(is_qid("Q"));
  EXPECT_FALSE(is_qid("Q12a"));
  EXPECT_EQ(replace_all("{x}-{x}", "{x}", "ab"), "ab-ab");
}

TEST(Relation, NamesRoundTrip) {
  ASSERT_EQ(all_relations().size(), 21u);
  for (const RelationId relation : all_relations()) {
    const auto parsed = parse_relation(to_string(relation));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, relation);
  }
  EXPECT_FALSE(parse_relation("countrybordersCountry").has_value());
  EXPECT_FALSE(parse_relation("PersonHasNoblePrize").has_value());
}

}  // namespace
}  // namespace llmke
