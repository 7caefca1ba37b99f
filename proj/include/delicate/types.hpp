#pragma once

// Core domain vocabulary shared across the pipeline.

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>

#include "delicate/error.hpp"

namespace delicate {

// The literal used for unresolvable mentions in every file format.
inline constexpr const char* kNil = "NIL";

enum class EntityType { Per, Loc, Org, Work };

inline constexpr EntityType kAllEntityTypes[] = {EntityType::Per, EntityType::Loc,
                                                 EntityType::Org, EntityType::Work};

inline const char* to_string(EntityType t) {
  switch (t) {
    case EntityType::Per:
      return "PER";
    case EntityType::Loc:
      return "LOC";
    case EntityType::Org:
      return "ORG";
    case EntityType::Work:
      return "WORK";
  }
  return "?";
}

// Lowercase word form used in prompts ("person", "location", ...).
inline const char* type_word(EntityType t) {
  switch (t) {
    case EntityType::Per:
      return "person";
    case EntityType::Loc:
      return "location";
    case EntityType::Org:
      return "organization";
    case EntityType::Work:
      return "work";
  }
  return "?";
}

inline std::optional<EntityType> parse_entity_type(std::string_view s) {
  std::string up;
  up.reserve(s.size());
  for (char c : s) up.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 0x20) : c);
  if (up == "PER") return EntityType::Per;
  if (up == "LOC") return EntityType::Loc;
  if (up == "ORG") return EntityType::Org;
  if (up == "WORK") return EntityType::Work;
  return std::nullopt;
}

inline bool is_qid(std::string_view s) {
  if (s.size() < 2 || s[0] != 'Q') return false;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

// A mention to disambiguate: surface form, annotated type, document date and
// flanking context, plus the source span used to key predictions.
struct Mention {
  std::string doc_id;
  int start = 0;
  int end = 0;
  std::string surface;
  EntityType etype = EntityType::Per;
  int date = 0;  // year of the owning document
  std::string left_context;
  std::string right_context;
  std::string gold = kNil;  // QID or NIL

  std::string key() const {
    return doc_id + ":" + std::to_string(start) + ":" + std::to_string(end);
  }
};

// One knowledge-base entity as stored in the lookup table.
struct EntityRecord {
  std::uint64_t entity_id = 0;
  std::string wikipedia_title;
  std::string qid;
  std::string label;
  std::optional<EntityType> etype;  // nullopt = no class in any closure
  std::optional<int> date;          // earliest admissible year

  bool operator==(const EntityRecord&) const = default;
};

// A retrieved entity joined with its distance to the query mention.
struct CandidateTuple {
  EntityRecord entity;
  double l2 = 0.0;
};

// Warning sink for non-fatal anomalies (multi-type entities, degenerate
// strata, hallucinated LLM picks). Defaults to stderr; tests swap it.
inline std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler =
      [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
  return handler;
}

inline void set_warning_handler(std::function<void(const std::string&)> handler) {
  warning_handler() = std::move(handler);
}

inline void warn(const std::string& msg) {
  if (warning_handler()) warning_handler()(msg);
}

}  // namespace delicate
