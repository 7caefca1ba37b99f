#pragma once

// Annotated-corpus handling: dataset files, fine-grained type mapping,
// chronologically stratified splits and mention extraction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "delicate/error.hpp"
#include "delicate/fs.hpp"
#include "delicate/rng.hpp"
#include "delicate/text.hpp"
#include "delicate/types.hpp"

namespace delicate::corpus {

enum class DatasetFormat { Eneide, Mhercl };

// A single annotated entity reference. `type_label` keeps the raw string
// from the file; `etype` is resolved eagerly for the four coarse types and
// stays empty for fine-grained labels until mapped.
struct Annotation {
  int start = 0;
  int end = 0;  // exclusive byte offset
  std::string surface;
  std::string type_label;
  std::optional<EntityType> etype;
  std::string gold = kNil;
};

struct Document {
  std::string id;
  int date = 0;  // year
  std::string text;
  std::vector<Annotation> annotations;
};

enum class SplitName { Train, Dev, Test };

inline const char* to_string(SplitName s) {
  switch (s) {
    case SplitName::Train:
      return "train";
    case SplitName::Dev:
      return "dev";
    case SplitName::Test:
      return "test";
  }
  return "?";
}

struct DatasetSplit {
  SplitName name = SplitName::Train;
  std::vector<Document> documents;
};

// --- fine-grained type mapping -------------------------------------------

// Fine-grained label -> coarse type, matched case-insensitively.
inline EntityType map_type(std::string_view fine) {
  static const std::map<std::string, EntityType, std::less<>> kTable = {
      {"person", EntityType::Per},
      {"family", EntityType::Org},
      {"organization", EntityType::Org},
      {"school", EntityType::Org},
      {"government-organization", EntityType::Org},
      {"university", EntityType::Org},
      {"newspaper", EntityType::Org},
      {"magazine", EntityType::Org},
      {"city", EntityType::Loc},
      {"country", EntityType::Loc},
      {"country region", EntityType::Loc},
      {"continent", EntityType::Loc},
      {"location", EntityType::Loc},
      {"mountain", EntityType::Loc},
      {"road", EntityType::Loc},
      {"lake", EntityType::Loc},
      {"island", EntityType::Loc},
      {"building", EntityType::Loc},
      {"worship-place", EntityType::Loc},
      {"facility", EntityType::Loc},
      {"theater", EntityType::Loc},
      {"book", EntityType::Work},
      {"work-of-art", EntityType::Work},
      {"publication", EntityType::Work},
      {"music", EntityType::Work},
      {"music key", EntityType::Work},
      {"award", EntityType::Work},
      {"event", EntityType::Work},
      {"festival", EntityType::Work},
      {"court decision", EntityType::Work},
      {"war", EntityType::Work},
      {"conference", EntityType::Work},
      {"law", EntityType::Work},
  };
  std::string lowered;
  lowered.reserve(fine.size());
  for (char c : fine) {
    lowered.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 0x20) : c);
  }
  const auto it = kTable.find(lowered);
  if (it == kTable.end()) throw UnmappedTypeError(std::string(fine));
  return it->second;
}

// --- dataset files --------------------------------------------------------

namespace detail {

inline int line_of_offset(std::string_view content, std::size_t byte_offset) {
  int line = 1;
  const std::size_t stop = std::min(byte_offset, content.size());
  for (std::size_t i = 0; i < stop; ++i) {
    if (content[i] == '\n') ++line;
  }
  return line;
}

inline int year_of(const nlohmann::json& value, const std::string& where) {
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_string()) {
    // Finer-grained dates ("1886-03-01") truncate to the leading year.
    const std::string s = value.get<std::string>();
    std::size_t pos = 0;
    bool neg = false;
    if (pos < s.size() && s[pos] == '-') {
      neg = true;
      ++pos;
    }
    long year = 0;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      year = year * 10 + (s[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0) throw ValidationError(where + ": cannot parse date \"" + s + "\"");
    return static_cast<int>(neg ? -year : year);
  }
  throw ValidationError(where + ": date must be an integer year or a date string");
}

inline void validate_document(const Document& doc) {
  if (doc.date <= 0) {
    throw ValidationError("document " + doc.id + ": date must be a positive year");
  }
  std::vector<const Annotation*> sorted;
  sorted.reserve(doc.annotations.size());
  for (const Annotation& a : doc.annotations) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(),
            [](const Annotation* a, const Annotation* b) { return a->start < b->start; });
  const Annotation* prev = nullptr;
  for (const Annotation* a : sorted) {
    const std::string where =
        "document " + doc.id + ", annotation [" + std::to_string(a->start) + "," +
        std::to_string(a->end) + ") \"" + a->surface + "\"";
    if (a->start >= a->end) throw ValidationError(where + ": empty or inverted span");
    if (a->start < 0 || static_cast<std::size_t>(a->end) > doc.text.size()) {
      throw ValidationError(where + ": offsets outside document text");
    }
    const std::string_view actual =
        std::string_view(doc.text).substr(static_cast<std::size_t>(a->start),
                                          static_cast<std::size_t>(a->end - a->start));
    if (actual != a->surface) {
      throw ValidationError(where + ": surface does not match text slice \"" +
                            std::string(actual) + "\"");
    }
    if (a->gold != kNil && !is_qid(a->gold)) {
      throw ValidationError(where + ": gold must be a QID or NIL, got \"" + a->gold + "\"");
    }
    if (prev != nullptr && prev->end > a->start) {
      throw ValidationError(where + ": overlaps preceding annotation");
    }
    prev = a;
  }
}

}  // namespace detail

inline std::vector<Document> parse_dataset(const std::string& content,
                                           DatasetFormat format,
                                           const std::string& origin = "<memory>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(origin + ":" +
                     std::to_string(detail::line_of_offset(content, e.byte)) +
                     ": malformed JSON: " + e.what());
  }
  std::vector<Document> docs;
  try {
    for (const auto& jd : j.at("documents")) {
      Document doc;
      doc.id = jd.at("id").get<std::string>();
      doc.date = detail::year_of(jd.at("date"), "document " + doc.id);
      doc.text = jd.at("text").get<std::string>();
      if (jd.contains("annotations")) {
        for (const auto& ja : jd.at("annotations")) {
          Annotation ann;
          ann.start = ja.at("start").get<int>();
          ann.end = ja.at("end").get<int>();
          ann.surface = ja.at("surface").get<std::string>();
          ann.type_label = ja.at("type").get<std::string>();
          ann.gold = ja.at("gold").get<std::string>();
          ann.etype = parse_entity_type(ann.type_label);
          if (format == DatasetFormat::Eneide && !ann.etype) {
            throw ValidationError("document " + doc.id + ": unknown entity type \"" +
                                  ann.type_label + "\"");
          }
          doc.annotations.push_back(std::move(ann));
        }
      }
      detail::validate_document(doc);
      docs.push_back(std::move(doc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": bad dataset shape: " + e.what());
  }
  return docs;
}

inline std::vector<Document> load_dataset(const std::string& path, DatasetFormat format) {
  return parse_dataset(fs::read_file(path), format, path);
}

inline nlohmann::json dataset_to_json(const std::vector<Document>& docs) {
  nlohmann::json out;
  out["documents"] = nlohmann::json::array();
  for (const Document& doc : docs) {
    nlohmann::json jd;
    jd["id"] = doc.id;
    jd["date"] = doc.date;
    jd["text"] = doc.text;
    jd["annotations"] = nlohmann::json::array();
    for (const Annotation& a : doc.annotations) {
      jd["annotations"].push_back({{"start", a.start},
                                   {"end", a.end},
                                   {"surface", a.surface},
                                   {"type", a.type_label},
                                   {"gold", a.gold}});
    }
    out["documents"].push_back(std::move(jd));
  }
  return out;
}

inline void save_dataset(const std::vector<Document>& docs, const std::string& path) {
  fs::write_file(path, dataset_to_json(docs).dump(2) + "\n");
}

// --- stratified splitting -------------------------------------------------

// Stratifies on document year bucketed by decade; buckets with fewer than
// three documents merge into the nearest decade so every stratum can donate
// to each split. Within a stratum, split sizes follow the largest-remainder
// rule with ties resolved in train < dev < test order.
inline std::array<DatasetSplit, 3> stratified_split(const std::vector<Document>& docs,
                                                    const std::array<double, 3>& ratios,
                                                    std::uint64_t seed) {
  if (docs.empty()) throw ValidationError("stratified_split: empty document list");
  const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(ratio_sum - 1.0) > 1e-9) {
    throw ValidationError("stratified_split: ratios must sum to 1");
  }

  const auto decade_of = [](int year) {
    return static_cast<int>(std::floor(year / 10.0)) * 10;
  };

  std::map<int, std::vector<const Document*>> strata;
  for (const Document& d : docs) strata[decade_of(d.date)].push_back(&d);

  // Merge undersized strata.
  for (;;) {
    if (strata.size() <= 1) break;
    auto victim = strata.end();
    for (auto it = strata.begin(); it != strata.end(); ++it) {
      if (it->second.size() >= 3) continue;
      if (victim == strata.end() || it->second.size() < victim->second.size()) victim = it;
    }
    if (victim == strata.end()) break;
    auto target = strata.end();
    int best_gap = 0;
    for (auto it = strata.begin(); it != strata.end(); ++it) {
      if (it == victim) continue;
      const int gap = std::abs(it->first - victim->first);
      if (target == strata.end() || gap < best_gap ||
          (gap == best_gap && it->first < target->first)) {
        target = it;
        best_gap = gap;
      }
    }
    warn("stratified_split: merging sparse stratum " + std::to_string(victim->first) +
         "s (" + std::to_string(victim->second.size()) + " docs) into " +
         std::to_string(target->first) + "s");
    target->second.insert(target->second.end(), victim->second.begin(),
                          victim->second.end());
    strata.erase(victim);
  }

  std::array<DatasetSplit, 3> out = {DatasetSplit{SplitName::Train, {}},
                                     DatasetSplit{SplitName::Dev, {}},
                                     DatasetSplit{SplitName::Test, {}}};

  for (auto& [decade, members] : strata) {
    std::sort(members.begin(), members.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });
    rng::SplitMix64 stratum_rng(
        rng::mix(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(decade))));
    rng::shuffle(members, stratum_rng);

    const std::size_t n = members.size();
    std::array<std::size_t, 3> sizes{};
    std::array<std::pair<double, int>, 3> remainders{};  // (fraction, split index)
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
      const double quota = ratios[static_cast<std::size_t>(i)] * static_cast<double>(n);
      sizes[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(quota));
      assigned += sizes[static_cast<std::size_t>(i)];
      remainders[static_cast<std::size_t>(i)] = {quota - std::floor(quota), i};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < n - assigned; ++i) {
      sizes[static_cast<std::size_t>(remainders[i].second)] += 1;
    }

    std::size_t cursor = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < sizes[s]; ++i, ++cursor) {
        out[s].documents.push_back(*members[cursor]);
      }
    }
  }
  return out;
}

// --- mention extraction ----------------------------------------------------

// One mention per annotation. Contexts are contiguous slices of the source
// text spanning at most `window` whitespace tokens on each side, trimmed of
// surrounding whitespace. Fine-grained annotation types go through map_type.
inline std::vector<Mention> extract_mentions(const std::vector<Document>& docs,
                                             int window) {
  if (window < 0) throw ValidationError("extract_mentions: window must be >= 0");
  std::vector<Mention> mentions;
  for (const Document& doc : docs) {
    const std::vector<text::TokenSpan> tokens = text::token_spans(doc.text);
    for (const Annotation& ann : doc.annotations) {
      Mention m;
      m.doc_id = doc.id;
      m.start = ann.start;
      m.end = ann.end;
      m.surface = ann.surface;
      m.date = doc.date;
      m.gold = ann.gold;
      m.etype = ann.etype ? *ann.etype : map_type(ann.type_label);

      if (window > 0) {
        // Left: last `window` tokens ending at or before the span.
        std::size_t left_first = tokens.size();
        int taken = 0;
        for (std::size_t i = tokens.size(); i-- > 0 && taken < window;) {
          if (tokens[i].end <= static_cast<std::size_t>(ann.start)) {
            left_first = i;
            ++taken;
          }
        }
        if (taken > 0) {
          const std::size_t begin = tokens[left_first].begin;
          m.left_context = text::trim(std::string_view(doc.text).substr(
              begin, static_cast<std::size_t>(ann.start) - begin));
        }
        // Right: first `window` tokens starting at or after the span.
        taken = 0;
        std::size_t right_end = 0;
        for (std::size_t i = 0; i < tokens.size() && taken < window; ++i) {
          if (tokens[i].begin >= static_cast<std::size_t>(ann.end)) {
            right_end = tokens[i].end;
            ++taken;
          }
        }
        if (taken > 0) {
          m.right_context = text::trim(std::string_view(doc.text).substr(
              static_cast<std::size_t>(ann.end),
              right_end - static_cast<std::size_t>(ann.end)));
        }
      }
      mentions.push_back(std::move(m));
    }
  }
  return mentions;
}

}  // namespace delicate::corpus
