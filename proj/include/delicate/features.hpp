#pragma once

// The nine pairwise similarity features computed for each (mention,
// candidate) pair: the candidate's embedding distance, four set-level
// distance statistics over the whole retrieved block, two string distances,
// type equivalence and the document/entity time delta.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "delicate/error.hpp"
#include "delicate/text.hpp"
#include "delicate/types.hpp"

namespace delicate::features {

inline constexpr std::size_t kFeatureCount = 9;

inline const std::array<std::string, kFeatureCount>& feature_names() {
  // Serialized feature order is part of the model contract; reordering
  // invalidates every trained model.
  static const std::array<std::string, kFeatureCount> names = {
      "l2",          "set_min", "set_max",    "set_mean",  "set_median",
      "levenshtein", "jaccard", "type_match", "delta_time"};
  return names;
}

struct FeatureVector {
  double l2 = 0.0;
  double set_min = 0.0;
  double set_max = 0.0;
  double set_mean = 0.0;
  double set_median = 0.0;
  double levenshtein = 0.0;
  double jaccard = 0.0;
  double type_match = 0.0;
  double delta_time = 0.0;

  std::array<double, kFeatureCount> as_array() const {
    return {l2,      set_min, set_max,    set_mean,  set_median,
            levenshtein, jaccard, type_match, delta_time};
  }
};

// Unit-cost edit distance over Unicode scalar values, after canonical
// composition and lowercasing. Unnormalized raw edit count.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  const std::vector<char32_t> ca = text::normalize_codepoints(a);
  const std::vector<char32_t> cb = text::normalize_codepoints(b);
  if (ca.empty()) return cb.size();
  if (cb.empty()) return ca.size();

  std::vector<std::size_t> prev(cb.size() + 1);
  std::vector<std::size_t> cur(cb.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 0; i < ca.size(); ++i) {
    cur[0] = i + 1;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const std::size_t subst = prev[j] + (ca[i] == cb[j] ? 0 : 1);
      cur[j + 1] = std::min({cur[j] + 1, prev[j + 1] + 1, subst});
    }
    prev.swap(cur);
  }
  return prev[cb.size()];
}

// 1 - |A inter B| / |A union B| over lowercased whitespace-token sets;
// two empty token sets count as distance 0.
inline double jaccard_distance(std::string_view a, std::string_view b) {
  const auto tokens_of = [](std::string_view s) {
    std::set<std::string> out;
    for (const std::string& tok : text::tokenize(text::normalize(s))) out.insert(tok);
    return out;
  };
  const std::set<std::string> ta = tokens_of(a);
  const std::set<std::string> tb = tokens_of(b);
  if (ta.empty() && tb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const std::string& t : ta) inter += tb.count(t);
  const std::size_t uni = ta.size() + tb.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

// Document year minus entity year; entities without a date contribute 0.
// Negative values (entity postdates the document) are preserved.
inline double delta_time(int mention_year, std::optional<int> entity_year) {
  if (!entity_year) return 0.0;
  return static_cast<double>(mention_year) - static_cast<double>(*entity_year);
}

inline double type_match(EntityType mention_type, std::optional<EntityType> entity_type) {
  return (entity_type && *entity_type == mention_type) ? 1.0 : 0.0;
}

// Features for every candidate of one retrieval block. The distance
// statistics are computed once over the block and replicated per row.
inline std::vector<FeatureVector> featurize_block(
    const Mention& mention, const std::vector<CandidateTuple>& candidates) {
  if (candidates.empty()) {
    throw ValidationError("featurize_block: empty candidate block for mention " +
                          mention.key());
  }
  std::vector<double> distances;
  distances.reserve(candidates.size());
  for (const CandidateTuple& c : candidates) distances.push_back(c.l2);
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());

  const double set_min = sorted.front();
  const double set_max = sorted.back();
  const double set_mean =
      std::accumulate(sorted.begin(), sorted.end(), 0.0) /
      static_cast<double>(sorted.size());
  const std::size_t mid = sorted.size() / 2;
  const double set_median = (sorted.size() % 2 == 1)
                                ? sorted[mid]
                                : (sorted[mid - 1] + sorted[mid]) / 2.0;

  std::vector<FeatureVector> out;
  out.reserve(candidates.size());
  for (const CandidateTuple& c : candidates) {
    FeatureVector fv;
    fv.l2 = c.l2;
    fv.set_min = set_min;
    fv.set_max = set_max;
    fv.set_mean = set_mean;
    fv.set_median = set_median;
    fv.levenshtein = static_cast<double>(levenshtein(mention.surface, c.entity.label));
    fv.jaccard = jaccard_distance(mention.surface, c.entity.label);
    fv.type_match = type_match(mention.etype, c.entity.etype);
    fv.delta_time = delta_time(mention.date, c.entity.date);
    out.push_back(fv);
  }
  return out;
}

}  // namespace delicate::features
