// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace llmke {

/// The closed set of challenge relations, in alphabetical order.
enum class RelationId {
  BandHasMember,
  CityLocatedAtRiver,
  CompanyHasParentOrganisation,
  CompoundHasParts,
  CountryBordersCountry,
  CountryHasOfficialLanguage,
  CountryHasStates,
  FootballerPlaysPosition,
  PersonCauseOfDeath,
  PersonHasAutobiography,
  PersonHasEmployer,
  PersonHasNobelPrize,
  PersonHasNumberOfChildren,
  PersonHasPlaceOfDeath,
  PersonHasProfession,
  PersonHasSpouse,
  PersonPlaysInstrument,
  PersonSpeaksLanguage,
  RiverBasinsCountry,
  SeriesHasNumberOfEpisodes,
  StateBordersState,
};

inline constexpr std::size_t kRelationCount = 21;

const std::array<RelationId, kRelationCount>& all_relations();

std::string_view to_string(RelationId relation);

/// Exact-match lookup; no case folding or fuzzy matching.
std::optional<RelationId> parse_relation(std::string_view name);

}  // namespace llmke
