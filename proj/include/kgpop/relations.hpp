#pragma once
// The closed set of commonsense relation labels.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgpop {

enum class Relation : std::uint8_t {
  xEffect,
  oEffect,
  gEffect,
  xWant,
  oWant,
  gWant,
  xReact,
  oReact,
  gReact,
  xAttr,
  xNeed,
  xIntent,
  isBefore,
  isAfter,
  HinderedBy,
  xReason,
  Causes,
  HasSubEvent,
};

inline constexpr std::size_t kNumRelations = 18;

inline constexpr std::array<std::string_view, kNumRelations> kRelationNames = {
    "xEffect", "oEffect",  "gEffect",    "xWant",   "oWant",  "gWant",
    "xReact",  "oReact",   "gReact",     "xAttr",   "xNeed",  "xIntent",
    "isBefore", "isAfter", "HinderedBy", "xReason", "Causes", "HasSubEvent",
};

inline constexpr std::array<Relation, kNumRelations> all_relations() {
  std::array<Relation, kNumRelations> out{};
  for (std::size_t i = 0; i < kNumRelations; ++i)
    out[i] = static_cast<Relation>(i);
  return out;
}

inline std::string_view relation_name(Relation r) {
  return kRelationNames[static_cast<std::size_t>(r)];
}

inline std::optional<Relation> try_parse_relation(std::string_view name) {
  for (std::size_t i = 0; i < kNumRelations; ++i)
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  return std::nullopt;
}

inline Relation parse_relation(std::string_view name) {
  if (auto r = try_parse_relation(name)) return *r;
  throw std::invalid_argument("unknown relation: " + std::string(name));
}

// Serialization marker, e.g. "[xWant]". Text tokens can never collide with it
// because tokenization strips bracket characters.
inline std::string relation_marker(Relation r) {
  return "[" + std::string(relation_name(r)) + "]";
}

inline bool is_marker_token(std::string_view tok) {
  return tok.size() >= 2 && tok.front() == '[' && tok.back() == ']';
}

}  // namespace kgpop
