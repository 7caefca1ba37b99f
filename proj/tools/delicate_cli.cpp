// Command-line surface for the linking pipeline: artifact construction
// (index, lookup store), re-ranker training, batch linking, evaluation,
// explainability statistics and the offline prompt/response round.
//
// Exit codes: 0 success, 1 internal error, 2 input or validation error.

#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "delicate/delicate.hpp"

namespace {

using namespace delicate;

struct ProviderOpts {
  std::string sidecar_path;  // file-backed provider
  int hash_dim = 0;          // deterministic mock provider
};

void add_provider_options(CLI::App* cmd, ProviderOpts& opts) {
  auto* file_opt = cmd->add_option("--embeddings", opts.sidecar_path,
                                   "Mention-embedding sidecar file (file provider)");
  auto* hash_opt = cmd->add_option(
      "--hash-dim", opts.hash_dim,
      "Use the deterministic hash provider with this dimension (fixtures/tests)");
  file_opt->excludes(hash_opt);
  hash_opt->excludes(file_opt);
}

std::unique_ptr<index::EmbeddingProvider> make_provider(const ProviderOpts& opts) {
  if (!opts.sidecar_path.empty()) {
    return std::make_unique<index::FileEmbeddingProvider>(opts.sidecar_path);
  }
  if (opts.hash_dim > 0) {
    return std::make_unique<index::HashEmbeddingProvider>(
        static_cast<std::size_t>(opts.hash_dim));
  }
  throw ConfigError("an embedding provider is required: --embeddings or --hash-dim");
}

corpus::DatasetFormat parse_format(const std::string& name) {
  if (name == "eneide") return corpus::DatasetFormat::Eneide;
  if (name == "mhercl") return corpus::DatasetFormat::Mhercl;
  throw ConfigError("unknown dataset format \"" + name + "\"");
}

std::map<EntityType, std::vector<std::string>> load_roots(const std::string& path) {
  if (path.empty()) return kb::default_roots();
  const nlohmann::json j = nlohmann::json::parse(fs::read_file(path));
  std::map<EntityType, std::vector<std::string>> roots;
  for (const auto& [key, value] : j.items()) {
    const auto etype = parse_entity_type(key);
    if (!etype) throw ConfigError("roots file: unknown type key \"" + key + "\"");
    roots[*etype] = value.get<std::vector<std::string>>();
  }
  return roots;
}

// Preset + explicit flag overrides (flags win).
struct TrainOpts {
  std::string preset;
  double learning_rate = -1.0;
  int max_depth = -1;
  double min_samples_leaf = -1.0;
  double min_samples_split = -1.0;
  int n_estimators = -1;
  int block_size = -1;
  int c_neg_size = -1;
  double nil_threshold = -1.0;

  gbt::Hyperparams resolve_hp() const {
    gbt::Hyperparams hp;
    if (!preset.empty()) hp = presets::by_name(preset).hp;
    if (learning_rate >= 0.0) hp.learning_rate = learning_rate;
    if (max_depth >= 0) hp.max_depth = max_depth;
    if (min_samples_leaf >= 0.0) hp.min_samples_leaf = min_samples_leaf;
    if (min_samples_split >= 0.0) hp.min_samples_split = min_samples_split;
    if (n_estimators >= 0) hp.n_estimators = n_estimators;
    if (block_size >= 0) hp.block_size = block_size;
    if (c_neg_size >= 0) hp.c_neg_size = c_neg_size;
    return hp;
  }

  double resolve_nil_threshold() const {
    if (nil_threshold >= 0.0) return nil_threshold;
    if (!preset.empty()) return presets::by_name(preset).nil_threshold;
    return 0.4;
  }
};

void add_hp_options(CLI::App* cmd, TrainOpts& opts) {
  cmd->add_option("--preset", opts.preset, "Named configuration: dz, amd or all");
  cmd->add_option("--learning-rate", opts.learning_rate);
  cmd->add_option("--max-depth", opts.max_depth);
  cmd->add_option("--min-samples-leaf", opts.min_samples_leaf);
  cmd->add_option("--min-samples-split", opts.min_samples_split);
  cmd->add_option("--n-estimators", opts.n_estimators);
  cmd->add_option("--block-size", opts.block_size);
  cmd->add_option("--c-neg-size", opts.c_neg_size);
}

int run(int argc, char** argv) {
  CLI::App app{"diachronic entity linking pipeline"};
  app.set_config("--config", "", "Read defaults from a TOML-style config file");
  app.require_subcommand(1);

  // --- build-index ---
  std::string bi_embeddings, bi_out;
  auto* build_index = app.add_subcommand("build-index", "Validate embeddings and emit the index artifact");
  build_index->add_option("--embeddings", bi_embeddings, "Entity embedding file")->required();
  build_index->add_option("--out", bi_out, "Output index artifact")->required();

  // --- build-lookup ---
  std::string bl_entities, bl_edges, bl_type_facts, bl_date_facts, bl_roots, bl_out;
  auto* build_lookup = app.add_subcommand("build-lookup", "Build the entity lookup store from dump files");
  build_lookup->add_option("--entities", bl_entities, "Entity dump (JSONL)")->required();
  build_lookup->add_option("--edges", bl_edges, "Subclass edges (TSV child<TAB>parent)")->required();
  build_lookup->add_option("--type-facts", bl_type_facts, "Entity classes (JSONL)")->required();
  build_lookup->add_option("--date-facts", bl_date_facts, "Entity time facts (JSONL)")->required();
  build_lookup->add_option("--roots", bl_roots, "Roots file (JSON type -> [QID]); defaults to the built-in roots");
  build_lookup->add_option("--out", bl_out, "Output store file")->required();

  // --- train ---
  std::string tr_dataset, tr_format = "eneide", tr_index, tr_lookup, tr_out, tr_dump;
  ProviderOpts tr_provider;
  TrainOpts tr_opts;
  std::uint64_t tr_seed = 0;
  int tr_window = 16;
  auto* train = app.add_subcommand("train", "Train the re-ranking classifier");
  train->add_option("--dataset", tr_dataset)->required();
  train->add_option("--format", tr_format, "eneide or mhercl");
  train->add_option("--index", tr_index)->required();
  train->add_option("--lookup", tr_lookup)->required();
  train->add_option("--seed", tr_seed);
  train->add_option("--window", tr_window, "Context window in tokens");
  train->add_option("--out", tr_out, "Output model file")->required();
  train->add_option("--dump-features", tr_dump, "Also write the sampled training rows as TSV");
  add_provider_options(train, tr_provider);
  add_hp_options(train, tr_opts);

  // --- link ---
  std::string lk_dataset, lk_format = "eneide", lk_index, lk_lookup, lk_model, lk_out;
  ProviderOpts lk_provider;
  TrainOpts lk_opts;
  int lk_window = 16, lk_threads = 1;
  auto* link = app.add_subcommand("link", "Link dataset mentions and write predictions");
  link->add_option("--dataset", lk_dataset)->required();
  link->add_option("--format", lk_format);
  link->add_option("--index", lk_index)->required();
  link->add_option("--lookup", lk_lookup)->required();
  link->add_option("--model", lk_model)->required();
  link->add_option("--window", lk_window);
  link->add_option("--threads", lk_threads, "Batch parallelism (output is thread-count independent)");
  link->add_option("--nil-threshold", lk_opts.nil_threshold);
  link->add_option("--preset", lk_opts.preset);
  link->add_option("--block-size", lk_opts.block_size);
  link->add_option("--out", lk_out)->required();
  add_provider_options(link, lk_provider);

  // --- evaluate ---
  std::string ev_predictions, ev_dataset, ev_format = "eneide", ev_mode = "ed",
              ev_unit = "chars", ev_out;
  bool ev_table = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold annotations");
  evaluate->add_option("--predictions", ev_predictions)->required();
  evaluate->add_option("--dataset", ev_dataset)->required();
  evaluate->add_option("--format", ev_format);
  evaluate->add_option("--mode", ev_mode, "ed, e2e-exact or e2e-fuzzy");
  evaluate->add_option("--fuzzy-unit", ev_unit, "chars (default) or tokens");
  evaluate->add_option("--out", ev_out, "Write the JSON report here (default: stdout)");
  evaluate->add_flag("--table", ev_table, "Print per-class accuracy rows (ed mode)");

  // --- explain ---
  std::string ex_model, ex_features, ex_out, ex_metric = "pair";
  int ex_reps = 30;
  std::uint64_t ex_seed = 0;
  auto* explain = app.add_subcommand("explain", "Permutation importance, gain importance and score correlation");
  explain->add_option("--model", ex_model)->required();
  explain->add_option("--features", ex_features, "Labeled feature rows (TSV from train --dump-features)")->required();
  explain->add_option("--n-reps", ex_reps);
  explain->add_option("--seed", ex_seed);
  explain->add_option("--metric", ex_metric, "pair (default) or block (per-mention argmax)");
  explain->add_option("--out", ex_out);

  // --- prompt ---
  std::string pr_dataset, pr_format = "eneide", pr_index, pr_lookup, pr_out;
  ProviderOpts pr_provider;
  int pr_window = 16, pr_block = 10;
  auto* prompt = app.add_subcommand("prompt", "Write adjudication prompts for offline execution");
  prompt->add_option("--dataset", pr_dataset)->required();
  prompt->add_option("--format", pr_format);
  prompt->add_option("--index", pr_index)->required();
  prompt->add_option("--lookup", pr_lookup)->required();
  prompt->add_option("--window", pr_window);
  prompt->add_option("--block-size", pr_block);
  prompt->add_option("--out", pr_out)->required();
  add_provider_options(prompt, pr_provider);

  // --- parse-responses ---
  std::string rs_prompts, rs_responses, rs_out;
  bool rs_lenient = false;
  auto* parse_responses = app.add_subcommand("parse-responses", "Turn model responses into predictions");
  parse_responses->add_option("--prompts", rs_prompts, "Prompt dump written by `prompt`")->required();
  parse_responses->add_option("--responses", rs_responses, "JSONL {mention_key, response_text}")->required();
  parse_responses->add_flag("--lenient", rs_lenient, "Map unparseable responses to NIL instead of failing");
  parse_responses->add_option("--out", rs_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags are input errors
  }

  if (build_index->parsed()) {
    const index::EmbeddingMatrix matrix = index::ingest_embeddings(bi_embeddings);
    matrix.write(bi_out);
    std::cout << "indexed " << matrix.rows() << " embeddings of dim " << matrix.dim()
              << " -> " << bi_out << "\n";
    return 0;
  }

  if (build_lookup->parsed()) {
    const auto closure =
        kb::build_class_closure(kb::load_class_edges(bl_edges), load_roots(bl_roots));
    const kb::LookupStore store =
        kb::LookupStore::build(kb::load_entity_dump(bl_entities), closure,
                               kb::load_type_facts(bl_type_facts),
                               kb::load_date_facts(bl_date_facts));
    store.write(bl_out);
    std::cout << "stored " << store.size() << " entities -> " << bl_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    const auto docs = corpus::load_dataset(tr_dataset, parse_format(tr_format));
    const auto mentions = corpus::extract_mentions(docs, tr_window);
    const auto provider = make_provider(tr_provider);
    const auto matrix = index::EmbeddingMatrix::read(tr_index);
    const auto lookup = kb::LookupStore::read(tr_lookup);
    const gbt::Hyperparams hp = tr_opts.resolve_hp();
    const pipeline::TrainResult result =
        pipeline::train_reranker(mentions, *provider, matrix, lookup, hp, tr_seed);
    result.model.save(tr_out);
    if (!tr_dump.empty()) gbt::write_feature_tsv(result.rows, tr_dump);
    std::cout << "trained " << result.model.n_trees() << " trees on "
              << result.rows.size() << " rows -> " << tr_out << "\n";
    return 0;
  }

  if (link->parsed()) {
    const auto docs = corpus::load_dataset(lk_dataset, parse_format(lk_format));
    const auto mentions = corpus::extract_mentions(docs, lk_window);
    const auto provider = make_provider(lk_provider);
    const auto matrix = index::EmbeddingMatrix::read(lk_index);
    const auto lookup = kb::LookupStore::read(lk_lookup);
    const gbt::GbtModel model = gbt::GbtModel::load(lk_model);

    linker::PipelineConfig config;
    config.block_size = lk_opts.block_size >= 0 ? lk_opts.block_size
                        : !lk_opts.preset.empty()
                            ? presets::by_name(lk_opts.preset).hp.block_size
                            : 10;
    config.nil_threshold = lk_opts.resolve_nil_threshold();
    config.provider = provider.get();
    config.matrix = &matrix;
    config.lookup = &lookup;
    config.model = &model;

    const std::vector<linker::LinkOutcome> outcomes =
        linker::link_batch(mentions, config, lk_threads);
    std::vector<linker::LinkPrediction> predictions;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (outcomes[i].ok()) {
        predictions.push_back(*outcomes[i].prediction);
      } else {
        ++failures;
        std::cerr << "mention " << mentions[i].key() << ": " << outcomes[i].error << "\n";
      }
    }
    if (failures > 0) {
      throw ValidationError(std::to_string(failures) + " mentions failed to link");
    }
    fs::write_file(lk_out, linker::predictions_to_jsonl(predictions));
    std::cout << "linked " << predictions.size() << " mentions -> " << lk_out << "\n";
    return 0;
  }

  if (evaluate->parsed()) {
    const auto docs = corpus::load_dataset(ev_dataset, parse_format(ev_format));
    const auto predictions =
        linker::predictions_from_jsonl(fs::read_file(ev_predictions), ev_predictions);
    nlohmann::json report_json;
    std::string table;
    if (ev_mode == "ed") {
      const auto gold = corpus::extract_mentions(docs, 0);
      std::vector<eval::EdExample> examples;
      examples.reserve(predictions.size());
      std::vector<double> scores;
      std::vector<int> correctness;
      std::map<std::string, const Mention*> gold_by_key;
      for (const Mention& m : gold) gold_by_key[m.key()] = &m;
      for (const linker::LinkPrediction& p : predictions) {
        examples.push_back({p.mention_key(), p.decision});
        const auto it = gold_by_key.find(p.mention_key());
        if (it != gold_by_key.end()) {
          scores.push_back(p.score);
          correctness.push_back(p.decision == it->second->gold ? 1 : 0);
        }
      }
      const eval::EdReport report = eval::ed_accuracy(examples, gold);
      report_json = eval::to_json(report);
      try {
        report_json["correlation"] = eval::to_json(eval::point_biserial(scores, correctness));
      } catch (const Error& e) {
        warn(std::string("score correlation unavailable: ") + e.what());
      }
      if (ev_table) table = eval::render_ed_table(report);
    } else if (ev_mode == "e2e-exact" || ev_mode == "e2e-fuzzy") {
      std::vector<eval::Span> pred_spans;
      for (const auto& p : predictions) {
        pred_spans.push_back({p.doc_id, p.start, p.end, p.decision});
      }
      std::vector<eval::Span> gold_spans;
      std::map<std::string, std::string> texts;
      for (const auto& d : docs) {
        texts[d.id] = d.text;
        for (const auto& a : d.annotations) {
          gold_spans.push_back({d.id, a.start, a.end, a.gold});
        }
      }
      const auto mode = ev_mode == "e2e-exact" ? eval::MatchMode::Exact
                                               : eval::MatchMode::Fuzzy;
      const auto unit = ev_unit == "tokens" ? eval::OverlapUnit::Tokens
                                            : eval::OverlapUnit::Characters;
      report_json =
          eval::to_json(eval::e2e_metrics(pred_spans, gold_spans, mode, unit, &texts));
    } else {
      throw ConfigError("unknown evaluate mode \"" + ev_mode + "\"");
    }
    if (!ev_out.empty()) {
      fs::write_file(ev_out, report_json.dump(2) + "\n");
    } else {
      std::cout << report_json.dump(2) << "\n";
    }
    if (!table.empty()) std::cout << table;
    return 0;
  }

  if (explain->parsed()) {
    const gbt::GbtModel model = gbt::GbtModel::load(ex_model);
    const gbt::FeatureTable table = gbt::read_feature_tsv(ex_features);
    eval::Metric metric = eval::pair_accuracy;
    if (ex_metric == "block") {
      metric = eval::make_block_accuracy_metric(table.mention_keys);
    } else if (ex_metric != "pair") {
      throw ConfigError("unknown explain metric \"" + ex_metric + "\"");
    }
    const eval::ImportanceReport importance = eval::permutation_importance(
        model, table.x, table.y, metric, ex_reps, ex_seed);
    nlohmann::json report;
    report["permutation_importance"] = eval::to_json(importance);
    const std::vector<double> gains = gbt::gain_importance(model);
    nlohmann::json gain_json = nlohmann::json::array();
    for (std::size_t i = 0; i < gains.size(); ++i) {
      gain_json.push_back(
          {{"feature", model.feature_names()[i]}, {"gain", gains[i]}});
    }
    report["gain_importance"] = std::move(gain_json);
    std::vector<double> scores;
    scores.reserve(table.x.size());
    for (const auto& row : table.x) scores.push_back(model.predict_proba(row));
    try {
      report["correlation"] = eval::to_json(eval::point_biserial(scores, table.y));
    } catch (const Error& e) {
      warn(std::string("score correlation unavailable: ") + e.what());
    }
    if (!ex_out.empty()) {
      fs::write_file(ex_out, report.dump(2) + "\n");
    } else {
      std::cout << report.dump(2) << "\n";
    }
    return 0;
  }

  if (prompt->parsed()) {
    const auto docs = corpus::load_dataset(pr_dataset, parse_format(pr_format));
    const auto mentions = corpus::extract_mentions(docs, pr_window);
    const auto provider = make_provider(pr_provider);
    const auto matrix = index::EmbeddingMatrix::read(pr_index);
    const auto lookup = kb::LookupStore::read(pr_lookup);
    const auto records =
        pipeline::build_prompt_dump(mentions, *provider, matrix, lookup, pr_block);
    fs::write_file(pr_out, pipeline::prompt_dump_to_jsonl(records));
    std::cout << "wrote " << records.size() << " prompts -> " << pr_out << "\n";
    return 0;
  }

  if (parse_responses->parsed()) {
    const auto prompts =
        pipeline::prompt_dump_from_jsonl(fs::read_file(rs_prompts), rs_prompts);
    const auto responses =
        pipeline::responses_from_jsonl(fs::read_file(rs_responses), rs_responses);
    const auto predictions = pipeline::ingest_responses(prompts, responses, rs_lenient);
    fs::write_file(rs_out, linker::predictions_to_jsonl(predictions));
    std::cout << "parsed " << predictions.size() << " decisions -> " << rs_out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const delicate::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
