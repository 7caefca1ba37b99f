#pragma once

// Lookup-table construction: entity typing via the subclass closure of
// per-type root classes, earliest-date selection over admissible time
// properties, and a write-once single-file store.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "delicate/binio.hpp"
#include "delicate/error.hpp"
#include "delicate/fs.hpp"
#include "delicate/types.hpp"

namespace delicate::kb {

// Root classes per coarse type (Wikidata class QIDs).
inline std::map<EntityType, std::vector<std::string>> default_roots() {
  return {
      {EntityType::Per, {"Q215627", "Q95074", "Q97498056"}},
      {EntityType::Org, {"Q895526", "Q16334295", "Q14623646"}},
      {EntityType::Loc, {"Q3895768", "Q27096213", "Q58416391"}},
      {EntityType::Work, {"Q17537576", "Q15621286"}},
  };
}

// Time properties admissible as an entity date.
inline const std::set<std::string>& time_properties() {
  static const std::set<std::string> props = {
      "P569",  "P571",  "P1619", "P1191", "P10135", "P577", "P575", "P1317",
      "P7124", "P10673", "P9448", "P6949", "P729",  "P2031", "P585"};
  return props;
}

// Class QID -> coarse type, with classes reachable from roots of more than
// one type removed.
struct ClassClosure {
  std::unordered_map<std::string, EntityType> mapping;

  std::optional<EntityType> type_of(const std::string& class_qid) const {
    const auto it = mapping.find(class_qid);
    if (it == mapping.end()) return std::nullopt;
    return it->second;
  }
};

// Builds the closure by walking reversed subclass edges (parent -> children)
// from each type's roots. The visited set makes traversal terminate on the
// cycles Wikidata contains.
inline ClassClosure build_class_closure(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::map<EntityType, std::vector<std::string>>& roots) {
  std::unordered_map<std::string, std::vector<std::string>> children;
  std::unordered_set<std::string> known;
  for (const auto& [child, parent] : edges) {
    children[parent].push_back(child);
    known.insert(child);
    known.insert(parent);
  }

  std::unordered_map<std::string, unsigned> type_mask;
  for (const auto& [etype, root_list] : roots) {
    const unsigned bit = 1u << static_cast<unsigned>(etype);
    for (const std::string& root : root_list) {
      if (!known.count(root)) {
        throw ConfigError("class closure: root " + root + " for type " +
                          to_string(etype) + " is absent from the subclass edges");
      }
      std::deque<std::string> frontier{root};
      std::unordered_set<std::string> visited{root};
      while (!frontier.empty()) {
        const std::string cls = std::move(frontier.front());
        frontier.pop_front();
        type_mask[cls] |= bit;
        const auto it = children.find(cls);
        if (it == children.end()) continue;
        for (const std::string& sub : it->second) {
          if (visited.insert(sub).second) frontier.push_back(sub);
        }
      }
    }
  }

  ClassClosure closure;
  for (const auto& [cls, mask] : type_mask) {
    if ((mask & (mask - 1)) != 0) continue;  // multiple types: dropped
    for (EntityType t : kAllEntityTypes) {
      if (mask == (1u << static_cast<unsigned>(t))) {
        closure.mapping.emplace(cls, t);
        break;
      }
    }
  }
  return closure;
}

// Earliest year among facts with an admissible time property.
inline std::optional<int> select_date(
    const std::vector<std::pair<std::string, int>>& facts) {
  std::optional<int> earliest;
  for (const auto& [prop, year] : facts) {
    if (!time_properties().count(prop)) continue;
    if (!earliest || year < *earliest) earliest = year;
  }
  return earliest;
}

// --- persistent lookup store -----------------------------------------------

// Immutable after build; readers share it without locking. On disk it is a
// single file of records sorted by entity id, so rebuilding from identical
// dumps is byte-identical.
class LookupStore {
 public:
  static constexpr char kMagic[4] = {'D', 'L', 'L', 'K'};
  static constexpr std::uint32_t kVersion = 1;

  LookupStore() = default;

  static LookupStore build(
      std::vector<EntityRecord> entities, const ClassClosure& closure,
      const std::unordered_map<std::uint64_t, std::vector<std::string>>& entity_classes,
      const std::unordered_map<std::uint64_t, std::vector<std::pair<std::string, int>>>&
          entity_facts) {
    LookupStore store;
    for (EntityRecord& rec : entities) {
      if (rec.qid.empty() || !is_qid(rec.qid)) {
        throw IngestError("entity " + std::to_string(rec.entity_id) +
                          ": missing or malformed QID \"" + rec.qid + "\"");
      }
      const auto cls_it = entity_classes.find(rec.entity_id);
      if (cls_it != entity_classes.end()) {
        std::optional<EntityType> assigned;
        for (const std::string& cls : cls_it->second) {
          const auto t = closure.type_of(cls);
          if (!t) continue;
          if (!assigned) {
            assigned = t;  // first class in dump order wins
          } else if (*assigned != *t) {
            warn("entity " + rec.qid + ": classes resolve to both " +
                 to_string(*assigned) + " and " + to_string(*t) + "; keeping " +
                 to_string(*assigned));
          }
        }
        rec.etype = assigned;
      }
      const auto facts_it = entity_facts.find(rec.entity_id);
      if (facts_it != entity_facts.end()) rec.date = select_date(facts_it->second);
      if (!store.records_.emplace(rec.entity_id, std::move(rec)).second) {
        throw IngestError("duplicate entity_id " + std::to_string(rec.entity_id) +
                          " in entity dump");
      }
    }
    return store;
  }

  CandidateTuple lookup(std::uint64_t entity_id, double l2) const {
    const auto it = records_.find(entity_id);
    if (it == records_.end()) {
      throw MissingEntityError("entity_id " + std::to_string(entity_id) +
                               " is in the index but not in the lookup store");
    }
    return CandidateTuple{it->second, l2};
  }

  bool contains(std::uint64_t entity_id) const { return records_.count(entity_id) > 0; }
  std::size_t size() const { return records_.size(); }

  const std::unordered_map<std::uint64_t, EntityRecord>& records() const {
    return records_;
  }

  void write(const std::string& path) const {
    std::vector<const EntityRecord*> ordered;
    ordered.reserve(records_.size());
    for (const auto& [id, rec] : records_) ordered.push_back(&rec);
    std::sort(ordered.begin(), ordered.end(),
              [](const EntityRecord* a, const EntityRecord* b) {
                return a->entity_id < b->entity_id;
              });

    binio::Writer w(path);
    w.write_bytes(kMagic, sizeof(kMagic));
    w.write<std::uint32_t>(kVersion);
    w.write<std::uint64_t>(ordered.size());
    for (const EntityRecord* rec : ordered) {
      w.write<std::uint64_t>(rec->entity_id);
      w.write_string(rec->qid);
      w.write_string(rec->wikipedia_title);
      w.write_string(rec->label);
      w.write<std::uint8_t>(rec->etype
                                ? static_cast<std::uint8_t>(
                                      static_cast<unsigned>(*rec->etype) + 1)
                                : std::uint8_t{0});
      w.write<std::uint8_t>(rec->date ? 1 : 0);
      w.write<std::int32_t>(rec->date ? *rec->date : 0);
    }
    w.finish();
  }

  static LookupStore read(const std::string& path) {
    binio::Reader r(path);
    char magic[4];
    r.read_bytes(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
      throw IngestError("not a lookup store: " + path);
    }
    const auto version = r.read<std::uint32_t>("version");
    if (version != kVersion) {
      throw IngestError("unsupported lookup store version " + std::to_string(version));
    }
    const auto n = r.read<std::uint64_t>("record count");
    LookupStore store;
    for (std::uint64_t i = 0; i < n; ++i) {
      EntityRecord rec;
      rec.entity_id = r.read<std::uint64_t>("entity_id");
      rec.qid = r.read_string("qid");
      rec.wikipedia_title = r.read_string("wikipedia_title");
      rec.label = r.read_string("label");
      const auto type_code = r.read<std::uint8_t>("type");
      if (type_code > 0) rec.etype = static_cast<EntityType>(type_code - 1);
      const auto has_date = r.read<std::uint8_t>("has_date");
      const auto year = r.read<std::int32_t>("date");
      if (has_date) rec.date = year;
      if (!store.records_.emplace(rec.entity_id, std::move(rec)).second) {
        throw IngestError("duplicate entity_id in store file: " + path);
      }
    }
    return store;
  }

 private:
  std::unordered_map<std::uint64_t, EntityRecord> records_;
};

// --- dump-file parsing ------------------------------------------------------

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::string& content, const std::string& origin, Fn&& fn) {
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) +
                       ": malformed JSON: " + e.what());
    }
    try {
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace detail

inline std::vector<EntityRecord> load_entity_dump(const std::string& path) {
  std::vector<EntityRecord> out;
  detail::for_each_jsonl(fs::read_file(path), path, [&](const nlohmann::json& j) {
    EntityRecord rec;
    rec.entity_id = j.at("entity_id").get<std::uint64_t>();
    rec.wikipedia_title = j.at("wikipedia_title").get<std::string>();
    rec.qid = j.at("qid").get<std::string>();
    rec.label = j.at("label").get<std::string>();
    out.push_back(std::move(rec));
  });
  return out;
}

inline std::vector<std::pair<std::string, std::string>> load_class_edges(
    const std::string& path) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::istringstream in(fs::read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected child<TAB>parent");
    }
    edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return edges;
}

inline std::unordered_map<std::uint64_t, std::vector<std::string>> load_type_facts(
    const std::string& path) {
  std::unordered_map<std::uint64_t, std::vector<std::string>> out;
  detail::for_each_jsonl(fs::read_file(path), path, [&](const nlohmann::json& j) {
    out[j.at("entity_id").get<std::uint64_t>()] =
        j.at("classes").get<std::vector<std::string>>();
  });
  return out;
}

inline std::unordered_map<std::uint64_t, std::vector<std::pair<std::string, int>>>
load_date_facts(const std::string& path) {
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::string, int>>> out;
  detail::for_each_jsonl(fs::read_file(path), path, [&](const nlohmann::json& j) {
    std::vector<std::pair<std::string, int>> facts;
    for (const auto& f : j.at("facts")) {
      facts.emplace_back(f.at(0).get<std::string>(), f.at(1).get<int>());
    }
    out[j.at("entity_id").get<std::uint64_t>()] = std::move(facts);
  });
  return out;
}

}  // namespace delicate::kb
