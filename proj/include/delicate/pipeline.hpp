#pragma once

// File-level orchestration shared by the CLI and the integration tests:
// dataset -> training rows -> model, dataset -> predictions, and the prompt
// dump / response ingestion round used for offline adjudication.

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "delicate/corpus.hpp"
#include "delicate/error.hpp"
#include "delicate/features.hpp"
#include "delicate/fs.hpp"
#include "delicate/gbt.hpp"
#include "delicate/index.hpp"
#include "delicate/kb.hpp"
#include "delicate/linker.hpp"
#include "delicate/types.hpp"

namespace delicate::pipeline {

// Candidate blocks for every mention, one retrieval call each. Mentions
// whose retrieval comes back empty (empty index) yield empty blocks.
inline std::vector<gbt::TrainingBlock> retrieve_blocks(
    const std::vector<Mention>& mentions, const index::EmbeddingProvider& provider,
    const index::EmbeddingMatrix& matrix, const kb::LookupStore& lookup,
    int block_size) {
  linker::PipelineConfig config;
  config.block_size = block_size;
  config.nil_threshold = 0.0;
  config.provider = &provider;
  config.matrix = &matrix;
  config.lookup = &lookup;
  std::vector<gbt::TrainingBlock> blocks;
  blocks.reserve(mentions.size());
  for (const Mention& m : mentions) {
    blocks.push_back({m, linker::retrieve_block(m, config)});
  }
  return blocks;
}

struct TrainResult {
  gbt::GbtModel model;
  std::vector<gbt::LabeledRow> rows;
};

// Retrieval + sampling + fitting for a list of gold mentions.
inline TrainResult train_reranker(const std::vector<Mention>& mentions,
                                  const index::EmbeddingProvider& provider,
                                  const index::EmbeddingMatrix& matrix,
                                  const kb::LookupStore& lookup,
                                  const gbt::Hyperparams& hp, std::uint64_t seed) {
  hp.validate();
  const std::vector<gbt::TrainingBlock> blocks =
      retrieve_blocks(mentions, provider, matrix, lookup, hp.block_size);
  std::vector<gbt::LabeledRow> rows =
      gbt::sample_training_pairs(blocks, hp.c_neg_size, seed);

  gbt::Matrix x;
  std::vector<int> y;
  x.reserve(rows.size());
  for (const gbt::LabeledRow& row : rows) {
    const auto arr = row.fv.as_array();
    x.emplace_back(arr.begin(), arr.end());
    y.push_back(row.label);
  }
  const auto& names = features::feature_names();
  gbt::GbtModel model =
      gbt::fit(x, y, hp, std::vector<std::string>(names.begin(), names.end()), seed);
  return TrainResult{std::move(model), std::move(rows)};
}

// --- prompt dump & response ingestion ----------------------------------------

// One dumped prompt per mention. Candidate QIDs ride along so responses can
// be guarded against out-of-list picks without re-running retrieval.
struct PromptRecord {
  std::string mention_key;
  std::string doc_id;
  int start = 0;
  int end = 0;
  EntityType etype = EntityType::Per;
  linker::PromptPair prompt;
  std::vector<std::string> candidate_qids;
};

inline std::vector<PromptRecord> build_prompt_dump(
    const std::vector<Mention>& mentions, const index::EmbeddingProvider& provider,
    const index::EmbeddingMatrix& matrix, const kb::LookupStore& lookup,
    int block_size) {
  linker::PipelineConfig config;
  config.block_size = block_size;
  config.provider = &provider;
  config.matrix = &matrix;
  config.lookup = &lookup;
  std::vector<PromptRecord> records;
  records.reserve(mentions.size());
  for (const Mention& m : mentions) {
    const std::vector<CandidateTuple> block = linker::retrieve_block(m, config);
    if (block.empty()) {
      warn("prompt dump: no candidates retrieved for " + m.key() + "; skipping");
      continue;
    }
    PromptRecord rec;
    rec.mention_key = m.key();
    rec.doc_id = m.doc_id;
    rec.start = m.start;
    rec.end = m.end;
    rec.etype = m.etype;
    rec.prompt = linker::build_prompt(m, block, m.date);
    for (const CandidateTuple& c : block) rec.candidate_qids.push_back(c.entity.qid);
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::string prompt_dump_to_jsonl(const std::vector<PromptRecord>& records) {
  std::ostringstream out;
  for (const PromptRecord& rec : records) {
    nlohmann::json j;
    j["mention_key"] = rec.mention_key;
    j["doc_id"] = rec.doc_id;
    j["start"] = rec.start;
    j["end"] = rec.end;
    j["type"] = to_string(rec.etype);
    j["system"] = rec.prompt.system_prompt;
    j["user"] = rec.prompt.user_prompt;
    j["candidates"] = rec.candidate_qids;
    out << j.dump() << "\n";
  }
  return out.str();
}

inline std::vector<PromptRecord> prompt_dump_from_jsonl(const std::string& content,
                                                        const std::string& origin) {
  std::vector<PromptRecord> records;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      PromptRecord rec;
      rec.mention_key = j.at("mention_key").get<std::string>();
      rec.doc_id = j.at("doc_id").get<std::string>();
      rec.start = j.at("start").get<int>();
      rec.end = j.at("end").get<int>();
      const auto etype = parse_entity_type(j.at("type").get<std::string>());
      if (!etype) throw ParseError("bad type");
      rec.etype = *etype;
      rec.prompt.system_prompt = j.at("system").get<std::string>();
      rec.prompt.user_prompt = j.at("user").get<std::string>();
      rec.candidate_qids = j.at("candidates").get<std::vector<std::string>>();
      records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

// Responses come back as JSONL {"mention_key", "response_text"}.
inline std::map<std::string, std::string> responses_from_jsonl(const std::string& content,
                                                               const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      out[j.at("mention_key").get<std::string>()] =
          j.at("response_text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Joins dumped prompts with model responses into predictions. Mentions
// without a response stay NIL with a warning; unparseable responses are
// parse errors unless `lenient`, which maps them to NIL.
inline std::vector<linker::LinkPrediction> ingest_responses(
    const std::vector<PromptRecord>& prompts,
    const std::map<std::string, std::string>& responses, bool lenient = false) {
  std::vector<linker::LinkPrediction> out;
  out.reserve(prompts.size());
  for (const PromptRecord& rec : prompts) {
    linker::LinkPrediction pred;
    pred.doc_id = rec.doc_id;
    pred.start = rec.start;
    pred.end = rec.end;
    pred.etype = rec.etype;
    const auto it = responses.find(rec.mention_key);
    if (it == responses.end()) {
      warn("no response for mention " + rec.mention_key + "; keeping NIL");
    } else {
      try {
        const linker::ParsedResponse parsed =
            linker::parse_llm_response(it->second, rec.candidate_qids);
        pred.decision = parsed.decision;
        if (pred.decision != kNil) pred.score = 1.0;
      } catch (const ParseError& e) {
        if (!lenient) {
          throw ParseError("response for " + rec.mention_key + ": " + e.what());
        }
        warn("response for " + rec.mention_key + " is unparseable; keeping NIL");
      }
    }
    out.push_back(std::move(pred));
  }
  return out;
}

}  // namespace delicate::pipeline
