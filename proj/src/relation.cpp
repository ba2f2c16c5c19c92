// SPDX-License-Identifier: Apache-2.0

#include "llmke/relation.hpp"

namespace llmke {
namespace {

constexpr std::array<std::string_view, kRelationCount> kNames = {
    "BandHasMember",
    "CityLocatedAtRiver",
    "CompanyHasParentOrganisation",
    "CompoundHasParts",
    "CountryBordersCountry",
    "CountryHasOfficialLanguage",
    "CountryHasStates",
    "FootballerPlaysPosition",
    "PersonCauseOfDeath",
    "PersonHasAutobiography",
    "PersonHasEmployer",
    "PersonHasNobelPrize",
    "PersonHasNumberOfChildren",
    "PersonHasPlaceOfDeath",
    "PersonHasProfession",
    "PersonHasSpouse",
    "PersonPlaysInstrument",
    "PersonSpeaksLanguage",
    "RiverBasinsCountry",
    "SeriesHasNumberOfEpisodes",
    "StateBordersState",
};

constexpr std::array<RelationId, kRelationCount> make_all() {
  std::array<RelationId, kRelationCount> out{};
  for (std::size_t i = 0; i < kRelationCount; ++i) out[i] = static_cast<RelationId>(i);
  return out;
}

constexpr auto kAll = make_all();

}  // namespace

const std::array<RelationId, kRelationCount>& all_relations() { return kAll; }

std::string_view to_string(RelationId relation) { return kNames[static_cast<std::size_t>(relation)]; }

std::optional<RelationId> parse_relation(std::string_view name) {
  for (std::size_t i = 0; i < kRelationCount; ++i) {
    if (kNames[i] == name) return static_cast<RelationId>(i);
  }
  return std::nullopt;
}

}  // namespace llmke
