#pragma once

// Shared test world: a 50-entity synthetic knowledge base with hash-provider
// embeddings and a corpus whose gold entities are separable from their
// same-label distractors only through type, time and string features.
//
// Each of 15 label families holds three entities sharing one label: the
// gold referent, a type distractor (different coarse type, similar date) and
// a time distractor (same type, +180 years). Five filler entities pad the
// retrieval blocks. All embeddings come from the deterministic hash
// provider, so retrieval always surfaces the whole family and the re-ranker
// has to do the real work.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "delicate/corpus.hpp"
#include "delicate/gbt.hpp"
#include "delicate/index.hpp"
#include "delicate/kb.hpp"
#include "delicate/types.hpp"

namespace fixture {

inline constexpr std::size_t kDim = 32;

class TempDir {
 public:
  TempDir() {
    char tmpl[] = "/tmp/delicate_test_XXXXXX";
    const char* made = ::mkdtemp(tmpl);
    if (made == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = made;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

struct World {
  std::vector<delicate::EntityRecord> entities;
  delicate::index::EmbeddingMatrix matrix{kDim};
  delicate::kb::LookupStore lookup;
  std::shared_ptr<delicate::index::HashEmbeddingProvider> provider;
  std::vector<delicate::corpus::Document> train_docs;
  std::vector<delicate::corpus::Document> dev_docs;
  std::vector<delicate::corpus::Document> test_docs;
  std::vector<delicate::Mention> train_mentions;
  std::vector<delicate::Mention> dev_mentions;
  std::vector<delicate::Mention> test_mentions;
  delicate::gbt::Hyperparams hp;

  // Raw inputs, kept so tests can also exercise the file-based route.
  std::vector<std::pair<std::string, std::string>> class_edges;
  std::map<delicate::EntityType, std::vector<std::string>> roots;
  std::unordered_map<std::uint64_t, std::vector<std::string>> type_facts;
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::string, int>>> date_facts;
};

namespace detail {

inline const std::vector<std::string>& family_labels() {
  static const std::vector<std::string> labels = {
      "giovanni amendola", "giorgio visconti",  "alessandro rinaldi",
      "maria ferrero",     "carlo salviati",    "federico borromeo",
      "anna aldobrandi",   "pietro colonna",    "luisa foscari",
      "matteo malaspina",  "bianca orsini",     "ugo pallavicino",
      "elena doria",       "stefano grimaldi",  "caterina ruspoli"};
  return labels;
}

inline const std::vector<std::string>& left_phrases() {
  static const std::vector<std::string> v = {
      "nel corso della discussione su", "come scrisse a proposito di",
      "durante il viaggio verso", "ricordando la figura di",
      "nelle pagine dedicate a"};
  return v;
}

inline const std::vector<std::string>& right_phrases() {
  static const std::vector<std::string> v = {
      "gli studiosi discussero a lungo", "secondo le cronache del tempo",
      "come riportato nei documenti", "il giudizio fu assai severo",
      "vicenda ricordata per generazioni"};
  return v;
}

inline delicate::EntityType type_of_family(std::size_t family) {
  return delicate::kAllEntityTypes[family % 4];
}

inline int family_year(std::size_t family) {
  return 1650 + static_cast<int>(family) * 17;
}

inline std::string class_for_type(delicate::EntityType t) {
  switch (t) {
    case delicate::EntityType::Per:
      return "Q5";
    case delicate::EntityType::Loc:
      return "Q515";
    case delicate::EntityType::Org:
      return "Q43229";
    case delicate::EntityType::Work:
      return "Q7725634";
  }
  return "Q5";
}

inline std::string date_property_for_type(delicate::EntityType t) {
  switch (t) {
    case delicate::EntityType::Per:
      return "P569";
    case delicate::EntityType::Work:
      return "P577";
    default:
      return "P571";
  }
}

inline delicate::corpus::Document make_doc(const std::string& doc_id, int year,
                                           std::size_t phrase_index,
                                           const std::string& surface,
                                           delicate::EntityType etype,
                                           const std::string& gold) {
  const std::string& left = left_phrases()[phrase_index % left_phrases().size()];
  const std::string& right = right_phrases()[phrase_index % right_phrases().size()];
  delicate::corpus::Document doc;
  doc.id = doc_id;
  doc.date = year;
  doc.text = left + " " + surface + " " + right;
  delicate::corpus::Annotation ann;
  ann.start = static_cast<int>(left.size() + 1);
  ann.end = static_cast<int>(left.size() + 1 + surface.size());
  ann.surface = surface;
  ann.type_label = delicate::to_string(etype);
  ann.etype = etype;
  ann.gold = gold;
  doc.annotations.push_back(std::move(ann));
  return doc;
}

}  // namespace detail

inline World build_world() {
  using delicate::EntityType;
  World world;
  world.provider = std::make_shared<delicate::index::HashEmbeddingProvider>(kDim);

  // c_neg_size 7 makes the even spread over the 9 sorted negatives of a
  // family block cover positions {0,1,...}, i.e. both same-label
  // distractors, so the trees see anachronistic dates during training.
  world.hp.learning_rate = 0.15;
  world.hp.max_depth = 5;
  world.hp.min_samples_leaf = 0.01;
  world.hp.min_samples_split = 0.02;
  world.hp.n_estimators = 120;
  world.hp.block_size = 10;
  world.hp.c_neg_size = 7;

  // --- entities -------------------------------------------------------------
  world.roots = delicate::kb::default_roots();
  for (const auto& [etype, root_list] : world.roots) {
    for (const std::string& root : root_list) world.class_edges.emplace_back(root, "Q35120");
  }
  world.class_edges.emplace_back("Q5", "Q215627");
  world.class_edges.emplace_back("Q515", "Q27096213");
  world.class_edges.emplace_back("Q43229", "Q16334295");
  world.class_edges.emplace_back("Q7725634", "Q17537576");

  const auto add_entity = [&](std::uint64_t id, const std::string& title,
                              const std::string& label, EntityType etype, int year) {
    delicate::EntityRecord rec;
    rec.entity_id = id;
    rec.wikipedia_title = title;
    rec.qid = "Q" + std::to_string(id);
    rec.label = label;
    world.entities.push_back(rec);
    world.type_facts[id] = {detail::class_for_type(etype)};
    world.date_facts[id] = {{detail::date_property_for_type(etype), year}};
  };

  const auto& labels = detail::family_labels();
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const std::uint64_t base = 1000 + static_cast<std::uint64_t>(j) * 10;
    const EntityType t = detail::type_of_family(j);
    const EntityType other = delicate::kAllEntityTypes[(j + 1) % 4];
    const int year = detail::family_year(j);
    add_entity(base + 0, labels[j], labels[j], t, year);
    add_entity(base + 1, labels[j] + " (omonimo)", labels[j], other, year + 3);
    add_entity(base + 2, labels[j] + " (il giovane)", labels[j], t, year + 180);
  }
  add_entity(2000, "teatro olimpico", "teatro olimpico", EntityType::Loc, 1585);
  add_entity(2001, "accademia dei lincei", "accademia dei lincei", EntityType::Org, 1603);
  add_entity(2002, "giovanni da montecorvino", "giovanni da montecorvino",
             EntityType::Per, 1247);
  add_entity(2003, "il canzoniere", "il canzoniere", EntityType::Work, 1470);
  add_entity(2004, "palazzo ducale", "palazzo ducale", EntityType::Loc, 1340);

  const auto closure = delicate::kb::build_class_closure(world.class_edges, world.roots);
  world.lookup = delicate::kb::LookupStore::build(world.entities, closure,
                                                  world.type_facts, world.date_facts);
  for (const delicate::EntityRecord& rec : world.entities) {
    const auto vec = world.provider->embed_text(rec.label);
    std::vector<float> row(vec.begin(), vec.end());
    world.matrix.add_row(rec.entity_id, row);
  }

  // --- documents --------------------------------------------------------------
  int doc_counter = 0;
  const auto add_doc = [&](std::vector<delicate::corpus::Document>& sink,
                           const char* prefix, int year, const std::string& surface,
                           EntityType etype, const std::string& gold) {
    std::ostringstream id;
    id << prefix << "-" << ++doc_counter;
    sink.push_back(detail::make_doc(id.str(), year,
                                    static_cast<std::size_t>(doc_counter), surface,
                                    etype, gold));
  };

  for (std::size_t j = 0; j < labels.size(); ++j) {
    const EntityType t = detail::type_of_family(j);
    const int year = detail::family_year(j);
    const std::string qid_old = "Q" + std::to_string(1000 + j * 10);
    const std::string qid_new = "Q" + std::to_string(1000 + j * 10 + 2);
    add_doc(world.train_docs, "tr", year + 5, labels[j], t, qid_old);
    add_doc(world.train_docs, "tr", year + 20, labels[j], t, qid_old);
    add_doc(world.train_docs, "tr", year + 195, labels[j], t, qid_new);
  }
  const std::vector<std::string> nil_train = {
      "taddeo bonfigli",       "girolamo squarcialupi", "eustachio bandinelli",
      "prassede mocenigo",     "lazzaro spallanzoni",   "raimondo buonarresti",
      "clemenza strozzafichi", "bonifacio scaranella"};
  for (std::size_t i = 0; i < nil_train.size(); ++i) {
    add_doc(world.train_docs, "tr", 1700 + static_cast<int>(i) * 13, nil_train[i],
            delicate::kAllEntityTypes[i % 4], delicate::kNil);
  }

  for (std::size_t j = 0; j < 7; ++j) {
    add_doc(world.dev_docs, "dv", detail::family_year(j) + 8, labels[j],
            detail::type_of_family(j), "Q" + std::to_string(1000 + j * 10));
  }
  const std::vector<std::string> nil_dev = {"ottaviano franceschini",
                                            "ippolita guidobaldi", "gaspare morosini"};
  for (std::size_t i = 0; i < nil_dev.size(); ++i) {
    add_doc(world.dev_docs, "dv", 1710 + static_cast<int>(i) * 21, nil_dev[i],
            delicate::kAllEntityTypes[i % 4], delicate::kNil);
  }

  for (std::size_t j = 0; j < labels.size(); ++j) {
    add_doc(world.test_docs, "te", detail::family_year(j) + 12, labels[j],
            detail::type_of_family(j), "Q" + std::to_string(1000 + j * 10));
  }
  for (std::size_t j = 0; j < labels.size(); ++j) {
    add_doc(world.test_docs, "te", detail::family_year(j) + 190, labels[j],
            detail::type_of_family(j), "Q" + std::to_string(1000 + j * 10 + 2));
  }
  const std::vector<std::string> nil_test = {
      "anselmo bentivoglio",  "fiorenza cantelmo",      "goffredo arcimboldi",
      "vincenza sanseverino", "corrado malatesta",      "olimpia carafa",
      "ludovica gonzaga",     "ambrogio castiglione",   "rosalba brunelleschi",
      "tommaso guinigi"};
  for (std::size_t i = 0; i < nil_test.size(); ++i) {
    add_doc(world.test_docs, "te", 1705 + static_cast<int>(i) * 17, nil_test[i],
            delicate::kAllEntityTypes[i % 4], delicate::kNil);
  }

  world.train_mentions = delicate::corpus::extract_mentions(world.train_docs, 8);
  world.dev_mentions = delicate::corpus::extract_mentions(world.dev_docs, 8);
  world.test_mentions = delicate::corpus::extract_mentions(world.test_docs, 8);
  return world;
}

// Writes every input artifact needed by the file-based (CLI) route.
struct WorldFiles {
  std::string train_dataset;
  std::string dev_dataset;
  std::string test_dataset;
  std::string embeddings;
  std::string entities;
  std::string edges;
  std::string type_facts;
  std::string date_facts;
};

inline WorldFiles write_world_files(const World& world, const TempDir& dir) {
  WorldFiles files;
  files.train_dataset = dir.file("train.json");
  files.dev_dataset = dir.file("dev.json");
  files.test_dataset = dir.file("test.json");
  files.embeddings = dir.file("embeddings.dlem");
  files.entities = dir.file("entities.jsonl");
  files.edges = dir.file("edges.tsv");
  files.type_facts = dir.file("type_facts.jsonl");
  files.date_facts = dir.file("date_facts.jsonl");

  delicate::corpus::save_dataset(world.train_docs, files.train_dataset);
  delicate::corpus::save_dataset(world.dev_docs, files.dev_dataset);
  delicate::corpus::save_dataset(world.test_docs, files.test_dataset);
  world.matrix.write(files.embeddings);

  std::ostringstream entities;
  for (const delicate::EntityRecord& rec : world.entities) {
    nlohmann::json j;
    j["entity_id"] = rec.entity_id;
    j["wikipedia_title"] = rec.wikipedia_title;
    j["qid"] = rec.qid;
    j["label"] = rec.label;
    entities << j.dump() << "\n";
  }
  delicate::fs::write_file(files.entities, entities.str());

  std::ostringstream edges;
  for (const auto& [child, parent] : world.class_edges) {
    edges << child << "\t" << parent << "\n";
  }
  delicate::fs::write_file(files.edges, edges.str());

  std::ostringstream type_facts;
  for (const delicate::EntityRecord& rec : world.entities) {
    nlohmann::json j;
    j["entity_id"] = rec.entity_id;
    j["classes"] = world.type_facts.at(rec.entity_id);
    type_facts << j.dump() << "\n";
  }
  delicate::fs::write_file(files.type_facts, type_facts.str());

  std::ostringstream date_facts;
  for (const delicate::EntityRecord& rec : world.entities) {
    nlohmann::json j;
    j["entity_id"] = rec.entity_id;
    j["facts"] = nlohmann::json::array();
    for (const auto& [prop, year] : world.date_facts.at(rec.entity_id)) {
      j["facts"].push_back(nlohmann::json::array({prop, year}));
    }
    date_facts << j.dump() << "\n";
  }
  delicate::fs::write_file(files.date_facts, date_facts.str());
  return files;
}

}  // namespace fixture
