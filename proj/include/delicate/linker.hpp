#pragma once

// Pipeline orchestration: embed -> retrieve -> lookup -> featurize ->
// re-rank -> NIL decision, plus the prompt-based adjudication protocol
// (prompt construction and response parsing; model invocation itself is an
// external-process contract).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "delicate/error.hpp"
#include "delicate/features.hpp"
#include "delicate/gbt.hpp"
#include "delicate/index.hpp"
#include "delicate/kb.hpp"
#include "delicate/types.hpp"

namespace delicate::linker {

struct PipelineConfig {
  int block_size = 10;
  double nil_threshold = 0.4;
  const index::EmbeddingProvider* provider = nullptr;
  const index::EmbeddingMatrix* matrix = nullptr;
  const kb::LookupStore* lookup = nullptr;
  const gbt::GbtModel* model = nullptr;

  void validate() const {
    if (block_size < 1) throw ConfigError("block_size must be >= 1");
    if (nil_threshold < 0.0 || nil_threshold > 1.0) {
      throw ConfigError("nil_threshold must be in [0, 1]");
    }
    if (!provider || !matrix || !lookup || !model) {
      throw ConfigError("pipeline config is missing a component");
    }
    if (matrix->rows() > 0 && provider->dim() != matrix->dim()) {
      throw ConfigError("provider dim " + std::to_string(provider->dim()) +
                        " does not match index dim " + std::to_string(matrix->dim()));
    }
  }
};

struct RankedCandidate {
  std::string qid;
  double probability = 0.0;
  std::uint64_t entity_id = 0;
};

struct LinkPrediction {
  std::string doc_id;
  int start = 0;
  int end = 0;
  EntityType etype = EntityType::Per;
  std::string decision = kNil;  // QID or NIL
  double score = 0.0;           // 0 for NIL
  std::vector<RankedCandidate> ranked;  // probability descending

  std::string mention_key() const {
    return doc_id + ":" + std::to_string(start) + ":" + std::to_string(end);
  }
};

// Retrieves the candidate block for one mention and joins it with the
// lookup store. Shared by linking, training and prompt construction.
inline std::vector<CandidateTuple> retrieve_block(const Mention& mention,
                                                  const PipelineConfig& config) {
  index::MentionEmbedding query;
  try {
    query = config.provider->embed(mention);
  } catch (const Error& e) {
    throw ProviderError("provider: " + std::string(e.what()));
  }
  index::RetrievalResult hits;
  try {
    hits = index::knn(*config.matrix, query,
                      static_cast<std::size_t>(config.block_size));
  } catch (const Error& e) {
    throw ValidationError("index: " + std::string(e.what()));
  }
  std::vector<CandidateTuple> block;
  block.reserve(hits.hits.size());
  for (const index::Hit& hit : hits.hits) {
    try {
      block.push_back(config.lookup->lookup(hit.entity_id, hit.l2));
    } catch (const Error& e) {
      throw MissingEntityError("lookup: " + std::string(e.what()));
    }
  }
  return block;
}

inline LinkPrediction link(const Mention& mention, const PipelineConfig& config) {
  config.validate();
  LinkPrediction pred;
  pred.doc_id = mention.doc_id;
  pred.start = mention.start;
  pred.end = mention.end;
  pred.etype = mention.etype;

  const std::vector<CandidateTuple> block = retrieve_block(mention, config);
  if (block.empty()) return pred;  // empty index: nothing retrievable, NIL

  const std::vector<features::FeatureVector> fvs =
      features::featurize_block(mention, block);
  pred.ranked.reserve(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    pred.ranked.push_back({block[i].entity.qid, config.model->predict_proba(fvs[i]),
                           block[i].entity.entity_id});
  }
  std::sort(pred.ranked.begin(), pred.ranked.end(),
            [](const RankedCandidate& a, const RankedCandidate& b) {
              if (a.probability != b.probability) return a.probability > b.probability;
              return a.entity_id < b.entity_id;
            });
  if (pred.ranked.front().probability >= config.nil_threshold) {
    pred.decision = pred.ranked.front().qid;
    pred.score = pred.ranked.front().probability;
  }
  return pred;
}

struct LinkOutcome {
  std::optional<LinkPrediction> prediction;
  std::string error;  // empty on success

  bool ok() const { return prediction.has_value(); }
};

// Element-wise link over a batch; per-mention failures are collected rather
// than aborting the batch. Output order matches input regardless of the
// number of worker threads.
inline std::vector<LinkOutcome> link_batch(const std::vector<Mention>& mentions,
                                           const PipelineConfig& config,
                                           int threads = 1) {
  config.validate();
  if (threads < 1) threads = 1;
  std::vector<LinkOutcome> out(mentions.size());
  const auto worker_span = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        out[i].prediction = link(mentions[i], config);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t n = mentions.size();
  if (threads == 1 || n <= 1) {
    worker_span(0, n);
    return out;
  }
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        worker_span(i, i + 1);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return out;
}

// --- prompt protocol ---------------------------------------------------------

struct PromptPair {
  std::string system_prompt;
  std::string user_prompt;
};

// The instructions refer to the markers as "entity tags" so the literal
// [ENT] token appears exactly once per side of the wrapped mention.
inline constexpr const char* kSystemPrompt =
    "You are an effective information extraction system specialized in "
    "disambiguating entities within texts from the humanities.\n"
    "Your task is to analyse the text provided by the user and disambiguate the "
    "reference marked by entity tags by selecting a Wikidata entity from a given "
    "list of candidates.\n"
    "Always respond by returning a JSON-formatted answer; do not generate Python "
    "code.";

inline nlohmann::json candidates_to_json(const std::vector<CandidateTuple>& candidates) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CandidateTuple& c : candidates) {
    nlohmann::json jc;
    jc["wikipedia_title"] = c.entity.wikipedia_title;
    jc["wikidata_id"] = c.entity.qid;
    jc["type"] = c.entity.etype ? nlohmann::json(type_word(*c.entity.etype))
                                : nlohmann::json(nullptr);
    jc["date"] = c.entity.date ? nlohmann::json(*c.entity.date) : nlohmann::json(nullptr);
    jc["score"] = c.l2;
    arr.push_back(std::move(jc));
  }
  return arr;
}

// Builds the adjudication prompt: task instruction with the document date,
// the text with the mention wrapped in [ENT] tags, the response-shape
// instruction, and the candidate list as a JSON array.
inline PromptPair build_prompt(const Mention& mention,
                               const std::vector<CandidateTuple>& candidates,
                               int doc_date) {
  if (candidates.empty()) {
    throw ValidationError("build_prompt: empty candidate list for mention " +
                          mention.key());
  }
  std::string annotated;
  if (!mention.left_context.empty()) annotated += mention.left_context + " ";
  annotated += "[ENT]" + mention.surface + "[ENT]";
  if (!mention.right_context.empty()) annotated += " " + mention.right_context;

  std::ostringstream user;
  user << "Read the input text published in " << doc_date << ".\n\n"
       << "Disambiguate the entity mentioned between the entity tags by selecting "
          "the most appropriate Wikidata entity from the list of candidates.\n\n"
       << "Return the corresponding Wikipedia title and Wikidata ID of the "
          "selected entity in a JSON object formatted as follows:\n"
       << "{\"wikipedia_title\": \"\", \"wikidata_id\": \"\"}\n\n"
       << "Make sure to select both the Wikipedia title and the Wikidata ID from "
          "the provided list of candidates.\n\n"
       << "If none of the candidates match the tagged entity, return an empty "
          "JSON object.\n\n"
       << "Input Text: " << annotated << "\n\n"
       << "List of Candidates: " << candidates_to_json(candidates).dump();
  return PromptPair{kSystemPrompt, user.str()};
}

struct ParsedResponse {
  std::string decision = kNil;  // QID or NIL
  bool coerced_to_nil = false;  // true when an out-of-list QID was rejected
};

// Extracts the first JSON object embedded in free-form model output. An
// empty object means NIL; a wikidata_id outside the candidate list is
// rejected as a hallucination and coerced to NIL with a warning.
inline ParsedResponse parse_llm_response(const std::string& text,
                                         const std::vector<std::string>& candidate_qids) {
  std::optional<nlohmann::json> obj;
  for (std::size_t at = text.find('{'); at != std::string::npos;
       at = text.find('{', at + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = at; i < text.size(); ++i) {
      const char ch = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (ch == '\\') {
          escaped = true;
        } else if (ch == '"') {
          in_string = false;
        }
        continue;
      }
      if (ch == '"') {
        in_string = true;
      } else if (ch == '{') {
        ++depth;
      } else if (ch == '}') {
        --depth;
        if (depth == 0) {
          try {
            obj = nlohmann::json::parse(text.substr(at, i - at + 1));
          } catch (const nlohmann::json::parse_error&) {
            obj.reset();
          }
          break;
        }
      }
    }
    if (obj && obj->is_object()) break;
    obj.reset();
  }
  if (!obj) throw ParseError("no JSON object found in model response");

  ParsedResponse parsed;
  if (obj->empty()) return parsed;  // explicit abstention
  if (!obj->contains("wikidata_id") || !(*obj)["wikidata_id"].is_string()) {
    warn("model response has no usable wikidata_id; treating as NIL");
    parsed.coerced_to_nil = true;
    return parsed;
  }
  const std::string qid = (*obj)["wikidata_id"].get<std::string>();
  if (!is_qid(qid) ||
      std::find(candidate_qids.begin(), candidate_qids.end(), qid) ==
          candidate_qids.end()) {
    warn("model picked " + qid + " which is not in the candidate list; treating as NIL");
    parsed.coerced_to_nil = true;
    return parsed;
  }
  parsed.decision = qid;
  return parsed;
}

// --- predictions file ----------------------------------------------------------

inline nlohmann::json prediction_to_json(const LinkPrediction& pred) {
  nlohmann::json j;
  j["doc_id"] = pred.doc_id;
  j["start"] = pred.start;
  j["end"] = pred.end;
  j["type"] = to_string(pred.etype);
  j["decision"] = pred.decision;
  j["score"] = pred.score;
  nlohmann::json ranked = nlohmann::json::array();
  for (const RankedCandidate& rc : pred.ranked) {
    ranked.push_back(nlohmann::json::array({rc.qid, rc.probability}));
  }
  j["ranked"] = std::move(ranked);
  return j;
}

inline std::string predictions_to_jsonl(const std::vector<LinkPrediction>& preds) {
  std::ostringstream out;
  for (const LinkPrediction& p : preds) out << prediction_to_json(p).dump() << "\n";
  return out.str();
}

inline std::vector<LinkPrediction> predictions_from_jsonl(const std::string& content,
                                                          const std::string& origin) {
  std::vector<LinkPrediction> out;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      LinkPrediction p;
      p.doc_id = j.at("doc_id").get<std::string>();
      p.start = j.at("start").get<int>();
      p.end = j.at("end").get<int>();
      const auto etype = parse_entity_type(j.at("type").get<std::string>());
      if (!etype) throw ParseError("bad type");
      p.etype = *etype;
      p.decision = j.at("decision").get<std::string>();
      p.score = j.at("score").get<double>();
      if (j.contains("ranked")) {
        for (const auto& rc : j.at("ranked")) {
          p.ranked.push_back({rc.at(0).get<std::string>(), rc.at(1).get<double>(), 0});
        }
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace delicate::linker
