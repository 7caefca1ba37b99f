#include "delicate/corpus.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace corpus = delicate::corpus;
using corpus::DatasetFormat;
using delicate::EntityType;

namespace {

std::string one_doc_json() {
  return R"({"documents": [{
    "id": "doc1", "date": 1821,
    "text": "Visitai Roma ieri",
    "annotations": [{"start": 8, "end": 12, "surface": "Roma", "type": "LOC", "gold": "Q220"}]
  }]})";
}

corpus::Document doc_with_year(const std::string& id, int year) {
  corpus::Document d;
  d.id = id;
  d.date = year;
  d.text = "testo";
  return d;
}

}  // namespace

TEST(LoadDataset, EmptyDocumentList) {
  const auto docs = corpus::parse_dataset(R"({"documents": []})", DatasetFormat::Eneide);
  EXPECT_TRUE(docs.empty());
}

TEST(LoadDataset, MinimalValidInstance) {
  const auto docs = corpus::parse_dataset(one_doc_json(), DatasetFormat::Eneide);
  ASSERT_EQ(docs.size(), 1u);
  ASSERT_EQ(docs[0].annotations.size(), 1u);
  const auto& ann = docs[0].annotations[0];
  EXPECT_EQ(ann.surface, "Roma");
  EXPECT_EQ(ann.etype, EntityType::Loc);
  EXPECT_EQ(ann.gold, "Q220");
}

TEST(LoadDataset, SurfaceOffsetMismatchNamesAnnotation) {
  std::string bad = one_doc_json();
  const auto pos = bad.find("\"start\": 8");
  bad.replace(pos, 10, "\"start\": 7");
  try {
    corpus::parse_dataset(bad, DatasetFormat::Eneide);
    FAIL() << "expected ValidationError";
  } catch (const delicate::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Roma"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("doc1"), std::string::npos);
  }
}

TEST(LoadDataset, MalformedJsonReportsLine) {
  const std::string bad = "{\n\"documents\": [\n{]\n}";
  try {
    corpus::parse_dataset(bad, DatasetFormat::Eneide, "bad.json");
    FAIL() << "expected ParseError";
  } catch (const delicate::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3"), std::string::npos);
  }
}

TEST(LoadDataset, RejectsOverlappingAnnotations) {
  const std::string two = R"({"documents": [{
    "id": "doc1", "date": 1821, "text": "Visitai Roma ieri",
    "annotations": [
      {"start": 8, "end": 12, "surface": "Roma", "type": "LOC", "gold": "Q220"},
      {"start": 10, "end": 14, "surface": "ma i", "type": "LOC", "gold": "NIL"}
    ]}]})";
  EXPECT_THROW(corpus::parse_dataset(two, DatasetFormat::Eneide),
               delicate::ValidationError);
}

TEST(LoadDataset, RejectsBadGoldAndBadDate) {
  std::string bad_gold = one_doc_json();
  bad_gold.replace(bad_gold.find("Q220"), 4, "x220");
  EXPECT_THROW(corpus::parse_dataset(bad_gold, DatasetFormat::Eneide),
               delicate::ValidationError);

  std::string bad_date = one_doc_json();
  bad_date.replace(bad_date.find("1821"), 4, "0");
  EXPECT_THROW(corpus::parse_dataset(bad_date, DatasetFormat::Eneide),
               delicate::ValidationError);
}

TEST(LoadDataset, MherclKeepsFineTypes) {
  std::string fine = one_doc_json();
  fine.replace(fine.find("\"LOC\""), 5, "\"city\"");
  EXPECT_THROW(corpus::parse_dataset(fine, DatasetFormat::Eneide),
               delicate::ValidationError);
  const auto docs = corpus::parse_dataset(fine, DatasetFormat::Mhercl);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].annotations[0].type_label, "city");
  EXPECT_FALSE(docs[0].annotations[0].etype.has_value());
}

TEST(LoadDataset, DateStringsTruncateToYear) {
  std::string dated = one_doc_json();
  dated.replace(dated.find("1821"), 4, "\"1821-06-29\"");
  const auto docs = corpus::parse_dataset(dated, DatasetFormat::Eneide);
  EXPECT_EQ(docs[0].date, 1821);
}

TEST(LoadDataset, RoundTrip) {
  const auto docs = corpus::parse_dataset(one_doc_json(), DatasetFormat::Eneide);
  const std::string serialized = corpus::dataset_to_json(docs).dump();
  const auto reparsed = corpus::parse_dataset(serialized, DatasetFormat::Eneide);
  ASSERT_EQ(reparsed.size(), docs.size());
  EXPECT_EQ(reparsed[0].id, docs[0].id);
  EXPECT_EQ(reparsed[0].date, docs[0].date);
  EXPECT_EQ(reparsed[0].text, docs[0].text);
  const auto& want = docs[0].annotations[0];
  const auto& got = reparsed[0].annotations[0];
  EXPECT_EQ(got.start, want.start);
  EXPECT_EQ(got.end, want.end);
  EXPECT_EQ(got.surface, want.surface);
  EXPECT_EQ(got.type_label, want.type_label);
  EXPECT_EQ(got.etype, want.etype);
  EXPECT_EQ(got.gold, want.gold);
}

TEST(MapType, FineGrainedRows) {
  EXPECT_EQ(corpus::map_type("city"), EntityType::Loc);
  EXPECT_EQ(corpus::map_type("person"), EntityType::Per);
  EXPECT_EQ(corpus::map_type("newspaper"), EntityType::Org);
  EXPECT_EQ(corpus::map_type("music key"), EntityType::Work);
  EXPECT_EQ(corpus::map_type("government-organization"), EntityType::Org);
  EXPECT_EQ(corpus::map_type("worship-place"), EntityType::Loc);
  EXPECT_EQ(corpus::map_type("court decision"), EntityType::Work);
}

TEST(MapType, CaseInsensitive) {
  EXPECT_EQ(corpus::map_type("City"), EntityType::Loc);
  EXPECT_EQ(corpus::map_type("PERSON"), EntityType::Per);
}

TEST(MapType, UnknownStringCarriesPayload) {
  try {
    corpus::map_type("spaceship");
    FAIL() << "expected UnmappedTypeError";
  } catch (const delicate::UnmappedTypeError& e) {
    EXPECT_EQ(e.fine_type(), "spaceship");
  }
}

TEST(StratifiedSplit, SingleStratumExactRatios) {
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 100; ++i) {
    docs.push_back(doc_with_year("d" + std::to_string(i), 1821));
  }
  const auto splits = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 0);
  EXPECT_EQ(splits[0].documents.size(), 70u);
  EXPECT_EQ(splits[1].documents.size(), 15u);
  EXPECT_EQ(splits[2].documents.size(), 15u);
}

TEST(StratifiedSplit, TwoStrataLargestRemainder) {
  // Five docs per decade-separated year; quota (3.5, .75, .75) rounds to
  // (3, 1, 1) under the largest-remainder rule in each stratum.
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 5; ++i) docs.push_back(doc_with_year("a" + std::to_string(i), 1821));
  for (int i = 0; i < 5; ++i) docs.push_back(doc_with_year("b" + std::to_string(i), 1953));
  const auto splits = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 42);
  EXPECT_EQ(splits[0].documents.size(), 6u);
  EXPECT_EQ(splits[1].documents.size(), 2u);
  EXPECT_EQ(splits[2].documents.size(), 2u);
  for (const auto& split : splits) {
    std::size_t early = 0;
    for (const auto& d : split.documents) early += d.date == 1821 ? 1 : 0;
    // Each year contributes within one document of its exact quota.
    const double quota = 0.5 * static_cast<double>(split.documents.size());
    EXPECT_LT(std::abs(static_cast<double>(early) - quota), 1.0 + 1e-9);
  }
}

TEST(StratifiedSplit, DeterministicForFixedSeed) {
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 37; ++i) {
    docs.push_back(doc_with_year("d" + std::to_string(i), 1800 + (i * 7) % 90));
  }
  const auto a = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 9);
  const auto b = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 9);
  for (int s = 0; s < 3; ++s) {
    ASSERT_EQ(a[s].documents.size(), b[s].documents.size());
    for (std::size_t i = 0; i < a[s].documents.size(); ++i) {
      EXPECT_EQ(a[s].documents[i].id, b[s].documents[i].id);
    }
  }
}

TEST(StratifiedSplit, SameDecadeYearsShareAStratum) {
  // 1821 and 1823 fall in the 1820s bucket: one stratum, exact 70/15/15.
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back(doc_with_year("a" + std::to_string(i), 1821));
    docs.push_back(doc_with_year("b" + std::to_string(i), 1823));
  }
  const auto splits = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 1);
  EXPECT_EQ(splits[0].documents.size(), 14u);
  EXPECT_EQ(splits[1].documents.size(), 3u);
  EXPECT_EQ(splits[2].documents.size(), 3u);
}

TEST(StratifiedSplit, SeedChangesAssignment) {
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 40; ++i) {
    docs.push_back(doc_with_year("d" + std::to_string(i), 1820));
  }
  const auto a = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 1);
  const auto b = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 2);
  std::vector<std::string> train_a;
  std::vector<std::string> train_b;
  for (const auto& d : a[0].documents) train_a.push_back(d.id);
  for (const auto& d : b[0].documents) train_b.push_back(d.id);
  EXPECT_NE(train_a, train_b);
}

TEST(StratifiedSplit, IsAPartition) {
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 83; ++i) {
    docs.push_back(doc_with_year("d" + std::to_string(i), 1750 + (i * 13) % 200));
  }
  const auto splits = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 5);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& split : splits) {
    for (const auto& d : split.documents) {
      EXPECT_TRUE(seen.insert(d.id).second) << "document in two splits: " << d.id;
      ++total;
    }
  }
  EXPECT_EQ(total, docs.size());
}

TEST(StratifiedSplit, MergesSparseStrataWithWarning) {
  std::vector<std::string> warnings;
  delicate::set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 6; ++i) docs.push_back(doc_with_year("a" + std::to_string(i), 1821));
  docs.push_back(doc_with_year("lone", 1953));  // single-doc stratum merges
  const auto splits = corpus::stratified_split(docs, {0.70, 0.15, 0.15}, 3);
  delicate::set_warning_handler({});
  std::size_t total = 0;
  for (const auto& s : splits) total += s.documents.size();
  EXPECT_EQ(total, 7u);
  ASSERT_FALSE(warnings.empty());
  EXPECT_NE(warnings[0].find("merging sparse stratum"), std::string::npos);
}

TEST(StratifiedSplit, RejectsBadInput) {
  EXPECT_THROW(corpus::stratified_split({}, {0.70, 0.15, 0.15}, 0),
               delicate::ValidationError);
  EXPECT_THROW(
      corpus::stratified_split({doc_with_year("a", 1800)}, {0.5, 0.2, 0.2}, 0),
      delicate::ValidationError);
}

TEST(ExtractMentions, ContextWindows) {
  const auto docs = corpus::parse_dataset(one_doc_json(), DatasetFormat::Eneide);
  const auto mentions = corpus::extract_mentions(docs, 8);
  ASSERT_EQ(mentions.size(), 1u);
  EXPECT_EQ(mentions[0].left_context, "Visitai");
  EXPECT_EQ(mentions[0].right_context, "ieri");
  EXPECT_EQ(mentions[0].surface, "Roma");
  EXPECT_EQ(mentions[0].date, 1821);
  EXPECT_EQ(mentions[0].key(), "doc1:8:12");
}

TEST(ExtractMentions, WindowZeroAndTextStart) {
  const std::string at_start = R"({"documents": [{
    "id": "doc1", "date": 1821, "text": "Roma fu grande",
    "annotations": [{"start": 0, "end": 4, "surface": "Roma", "type": "LOC", "gold": "Q220"}]
  }]})";
  const auto docs = corpus::parse_dataset(at_start, DatasetFormat::Eneide);
  auto mentions = corpus::extract_mentions(docs, 8);
  EXPECT_EQ(mentions[0].left_context, "");
  EXPECT_EQ(mentions[0].right_context, "fu grande");

  mentions = corpus::extract_mentions(docs, 0);
  EXPECT_EQ(mentions[0].left_context, "");
  EXPECT_EQ(mentions[0].right_context, "");
}

TEST(ExtractMentions, WindowLimitsTokenCount) {
  const std::string long_doc = R"({"documents": [{
    "id": "doc1", "date": 1821, "text": "uno due tre quattro Roma cinque sei sette otto",
    "annotations": [{"start": 20, "end": 24, "surface": "Roma", "type": "LOC", "gold": "Q220"}]
  }]})";
  const auto docs = corpus::parse_dataset(long_doc, DatasetFormat::Eneide);
  const auto mentions = corpus::extract_mentions(docs, 2);
  EXPECT_EQ(mentions[0].left_context, "tre quattro");
  EXPECT_EQ(mentions[0].right_context, "cinque sei");
}

TEST(ExtractMentions, MapsFineGrainedTypes) {
  std::string fine = one_doc_json();
  fine.replace(fine.find("\"LOC\""), 5, "\"city\"");
  const auto docs = corpus::parse_dataset(fine, DatasetFormat::Mhercl);
  const auto mentions = corpus::extract_mentions(docs, 4);
  EXPECT_EQ(mentions[0].etype, EntityType::Loc);

  std::string unknown = one_doc_json();
  unknown.replace(unknown.find("\"LOC\""), 5, "\"spaceship\"");
  const auto bad_docs = corpus::parse_dataset(unknown, DatasetFormat::Mhercl);
  EXPECT_THROW(corpus::extract_mentions(bad_docs, 4), delicate::UnmappedTypeError);
}
