#pragma once

// From-scratch gradient-boosted trees for binary classification with
// logistic loss. Each stage fits a regression tree to the residuals
// y - sigmoid(F) by exact variance-reduction split search; leaf values are
// one Newton step (sum of residuals over sum of hessians), clamped so raw
// scores stay bounded. Training is sequential and fully deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "delicate/error.hpp"
#include "delicate/features.hpp"
#include "delicate/fs.hpp"
#include "delicate/types.hpp"

namespace delicate::gbt {

using Row = std::vector<double>;
using Matrix = std::vector<Row>;

struct Hyperparams {
  double learning_rate = 0.1;
  int max_depth = 3;
  double min_samples_leaf = 0.01;   // fraction of the training set
  double min_samples_split = 0.01;  // fraction of the training set
  int n_estimators = 100;
  int block_size = 10;
  int c_neg_size = 5;

  void validate() const {
    if (learning_rate <= 0.0 || learning_rate > 1.0) {
      throw ConfigError("learning_rate must be in (0, 1]");
    }
    if (min_samples_leaf <= 0.0 || min_samples_leaf >= 1.0 ||
        min_samples_split <= 0.0 || min_samples_split >= 1.0) {
      throw ConfigError("min_samples_leaf/split must be fractions in (0, 1)");
    }
    if (max_depth < 1 || n_estimators < 1 || block_size < 1 || c_neg_size < 1) {
      throw ConfigError("max_depth, n_estimators, block_size and c_neg_size must be >= 1");
    }
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double gain = 0.0;  // variance (SSE) reduction achieved by this split
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf log-odds contribution

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double eval(const Row& x) const {
    int at = 0;
    for (;;) {
      const TreeNode& node = nodes[static_cast<std::size_t>(at)];
      if (node.is_leaf()) return node.value;
      at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                       : node.right;
    }
  }
};

namespace detail {

inline double sigmoid(double z) {
  // Raw scores are clamped so probabilities stay strictly inside (0, 1)
  // even for long ensembles.
  z = std::clamp(z, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-z));
}

inline constexpr double kMaxLeafValue = 4.0;

struct TreeBuilder {
  const Matrix& x;
  const std::vector<double>& residual;
  const std::vector<double>& hessian;
  std::size_t min_leaf;
  std::size_t min_split;
  int max_depth;
  Tree tree;

  int build(std::vector<std::size_t> indices, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum_r = 0.0;
    double sum_h = 0.0;
    for (std::size_t i : indices) {
      sum_r += residual[i];
      sum_h += hessian[i];
    }
    tree.nodes[static_cast<std::size_t>(node_id)].value =
        std::clamp(sum_r / std::max(sum_h, 1e-12), -kMaxLeafValue, kMaxLeafValue);

    if (depth >= max_depth || indices.size() < min_split || indices.size() < 2) {
      return node_id;
    }

    const auto split = find_best_split(indices, sum_r);
    if (!split) return node_id;

    std::vector<std::size_t> left_idx;
    std::vector<std::size_t> right_idx;
    left_idx.reserve(indices.size());
    for (std::size_t i : indices) {
      (x[i][split->feature] <= split->threshold ? left_idx : right_idx).push_back(i);
    }
    indices.clear();
    indices.shrink_to_fit();

    const int left_id = build(std::move(left_idx), depth + 1);
    const int right_id = build(std::move(right_idx), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.gain = split->gain;
    node.left = left_id;
    node.right = right_id;
    return node_id;
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  // Exact search over midpoints between consecutive distinct values.
  // Strictly-greater acceptance while scanning features then thresholds in
  // ascending order realizes the lowest-feature/lowest-threshold tie-break.
  std::optional<Split> find_best_split(const std::vector<std::size_t>& indices,
                                       double sum_r_total) const {
    const std::size_t n = indices.size();
    const std::size_t n_features = x[indices[0]].size();
    const double parent_term = sum_r_total * sum_r_total / static_cast<double>(n);

    std::optional<Split> best;
    std::vector<std::pair<double, std::size_t>> ordered(n);
    for (std::size_t f = 0; f < n_features; ++f) {
      for (std::size_t i = 0; i < n; ++i) {
        ordered[i] = {x[indices[i]][f], indices[i]};
      }
      std::sort(ordered.begin(), ordered.end());

      double prefix_r = 0.0;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        prefix_r += residual[ordered[pos].second];
        const double v = ordered[pos].first;
        const double next = ordered[pos + 1].first;
        if (v == next) continue;
        const std::size_t n_left = pos + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;

        double mid = v + (next - v) / 2.0;
        if (!(mid < next)) mid = v;  // adjacent representables

        const double sum_right = sum_r_total - prefix_r;
        const double gain = prefix_r * prefix_r / static_cast<double>(n_left) +
                            sum_right * sum_right / static_cast<double>(n_right) -
                            parent_term;
        if (gain > 0.0 && (!best || gain > best->gain)) {
          best = Split{f, mid, gain};
        }
      }
    }
    return best;
  }
};

}  // namespace detail

class GbtModel {
 public:
  static constexpr int kFormatVersion = 1;

  GbtModel() = default;
  GbtModel(std::vector<Tree> trees, double learning_rate, double base_score,
           std::vector<std::string> feature_names, std::uint64_t seed)
      : trees_(std::move(trees)),
        learning_rate_(learning_rate),
        base_score_(base_score),
        feature_names_(std::move(feature_names)),
        seed_(seed) {}

  std::size_t n_features() const { return feature_names_.size(); }
  std::size_t n_trees() const { return trees_.size(); }
  const std::vector<Tree>& trees() const { return trees_; }
  double learning_rate() const { return learning_rate_; }
  double base_score() const { return base_score_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  double raw_score(const Row& x) const {
    check_width(x);
    double acc = base_score_;
    for (const Tree& t : trees_) acc += learning_rate_ * t.eval(x);
    return acc;
  }

  double predict_proba(const Row& x) const { return detail::sigmoid(raw_score(x)); }

  double predict_proba(const features::FeatureVector& fv) const {
    const auto arr = fv.as_array();
    return predict_proba(Row(arr.begin(), arr.end()));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = kFormatVersion;
    j["feature_names"] = feature_names_;
    j["learning_rate"] = learning_rate_;
    j["base_score"] = base_score_;
    j["seed"] = seed_;
    j["trees"] = nlohmann::json::array();
    for (const Tree& t : trees_) j["trees"].push_back(node_to_json(t, 0));
    return j;
  }

  static GbtModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("version").get<int>() != kFormatVersion) {
        throw ParseError("unsupported model version");
      }
      GbtModel m;
      m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
      m.learning_rate_ = j.at("learning_rate").get<double>();
      m.base_score_ = j.at("base_score").get<double>();
      m.seed_ = j.at("seed").get<std::uint64_t>();
      for (const auto& jt : j.at("trees")) {
        Tree t;
        node_from_json(jt, t);
        m.trees_.push_back(std::move(t));
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad model JSON: ") + e.what());
    }
  }

  void save(const std::string& path) const { fs::write_file(path, to_json().dump() + "\n"); }

  static GbtModel load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(fs::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("model file " + path + ": " + e.what());
    }
  }

 private:
  void check_width(const Row& x) const {
    if (x.size() != feature_names_.size()) {
      throw ValidationError("feature count mismatch: got " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(feature_names_.size()));
    }
  }

  static nlohmann::json node_to_json(const Tree& t, int id) {
    const TreeNode& node = t.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return nlohmann::json{{"value", node.value}};
    return nlohmann::json{{"feature", node.feature},
                          {"threshold", node.threshold},
                          {"gain", node.gain},
                          {"left", node_to_json(t, node.left)},
                          {"right", node_to_json(t, node.right)}};
  }

  static int node_from_json(const nlohmann::json& j, Tree& t) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    if (j.contains("value")) {
      t.nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
      return id;
    }
    const int feature = j.at("feature").get<int>();
    const double threshold = j.at("threshold").get<double>();
    const double gain = j.value("gain", 0.0);
    const int left = node_from_json(j.at("left"), t);
    const int right = node_from_json(j.at("right"), t);
    TreeNode& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = feature;
    node.threshold = threshold;
    node.gain = gain;
    node.left = left;
    node.right = right;
    return id;
  }

  std::vector<Tree> trees_;
  double learning_rate_ = 0.1;
  double base_score_ = 0.0;
  std::vector<std::string> feature_names_;
  std::uint64_t seed_ = 0;
};

inline GbtModel fit(const Matrix& x, const std::vector<int>& y, const Hyperparams& hp,
                    std::vector<std::string> feature_names, std::uint64_t seed = 0) {
  hp.validate();
  if (x.size() != y.size()) throw ValidationError("fit: X and y row counts differ");
  if (x.size() < 2) throw DegenerateTrainingError("fit: need at least two rows");
  const std::size_t n = x.size();
  const std::size_t n_features = x[0].size();
  for (const Row& row : x) {
    if (row.size() != n_features) throw ValidationError("fit: ragged feature matrix");
  }
  if (feature_names.empty()) {
    for (std::size_t f = 0; f < n_features; ++f) {
      feature_names.push_back("f" + std::to_string(f));
    }
  }
  if (feature_names.size() != n_features) {
    throw ValidationError("fit: feature_names size does not match matrix width");
  }

  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw ValidationError("fit: labels must be 0/1");
    positives += static_cast<std::size_t>(label);
  }
  if (positives == 0 || positives == n) {
    throw DegenerateTrainingError(
        "fit: training labels are single-class; both classes are required");
  }

  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  const double base_score = std::log(prior / (1.0 - prior));
  const std::size_t min_leaf = static_cast<std::size_t>(
      std::ceil(hp.min_samples_leaf * static_cast<double>(n)));
  const std::size_t min_split = static_cast<std::size_t>(
      std::ceil(hp.min_samples_split * static_cast<double>(n)));

  std::vector<double> raw(n, base_score);
  std::vector<double> residual(n);
  std::vector<double> hessian(n);
  std::vector<std::size_t> all_indices(n);
  for (std::size_t i = 0; i < n; ++i) all_indices[i] = i;

  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(hp.n_estimators));
  for (int stage = 0; stage < hp.n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::sigmoid(raw[i]);
      residual[i] = static_cast<double>(y[i]) - p;
      hessian[i] = p * (1.0 - p);
    }
    detail::TreeBuilder builder{x, residual, hessian, std::max<std::size_t>(min_leaf, 1),
                                std::max<std::size_t>(min_split, 2), hp.max_depth, {}};
    builder.build(all_indices, 0);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] += hp.learning_rate * builder.tree.eval(x[i]);
    }
    trees.push_back(std::move(builder.tree));
  }
  return GbtModel(std::move(trees), hp.learning_rate, base_score,
                  std::move(feature_names), seed);
}

// Summed split gain per feature, normalized to sum 1 when any split exists.
inline std::vector<double> gain_importance(const GbtModel& model) {
  std::vector<double> gains(model.n_features(), 0.0);
  for (const Tree& t : model.trees()) {
    for (const TreeNode& node : t.nodes) {
      if (!node.is_leaf()) gains[static_cast<std::size_t>(node.feature)] += node.gain;
    }
  }
  double total = 0.0;
  for (double g : gains) total += g;
  if (total > 0.0) {
    for (double& g : gains) g /= total;
  }
  return gains;
}

// Training logistic loss after each boosting stage (index 0 = base score
// only). Used to check that boosting never increases the training loss.
inline std::vector<double> stagewise_logloss(const GbtModel& model, const Matrix& x,
                                             const std::vector<int>& y) {
  const std::size_t n = x.size();
  std::vector<double> raw(n, model.base_score());
  const auto loss = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::sigmoid(raw[i]);
      acc += y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return acc / static_cast<double>(n);
  };
  std::vector<double> losses{loss()};
  for (const Tree& t : model.trees()) {
    for (std::size_t i = 0; i < n; ++i) raw[i] += model.learning_rate() * t.eval(x[i]);
    losses.push_back(loss());
  }
  return losses;
}

// --- training-pair sampling --------------------------------------------------

struct TrainingBlock {
  Mention mention;
  std::vector<CandidateTuple> candidates;  // one retrieval call
};

struct LabeledRow {
  features::FeatureVector fv;
  int label = 0;
  std::string mention_key;
  std::uint64_t entity_id = 0;
};

// From each block: the gold candidate if retrieved, plus min(c_neg_size, n)
// negatives at positions evenly spread over the l2-sorted negative list
// (index i*(n-1)/(c-1) rounded to nearest; a single pick lands on the
// median position). The rule is deterministic; `seed` is recorded for
// interface stability and future stochastic strategies.
inline std::vector<LabeledRow> sample_training_pairs(
    const std::vector<TrainingBlock>& blocks, int c_neg_size, std::uint64_t seed) {
  (void)seed;
  if (c_neg_size < 1) throw ValidationError("sample_training_pairs: c_neg_size >= 1");
  std::vector<LabeledRow> rows;
  for (const TrainingBlock& block : blocks) {
    if (block.candidates.empty()) continue;
    const std::vector<features::FeatureVector> fvs =
        features::featurize_block(block.mention, block.candidates);

    // Positive: best-ranked candidate carrying the gold QID, if any.
    std::optional<std::size_t> positive;
    if (block.mention.gold != kNil) {
      for (std::size_t i = 0; i < block.candidates.size(); ++i) {
        if (block.candidates[i].entity.qid != block.mention.gold) continue;
        if (!positive ||
            block.candidates[i].l2 < block.candidates[*positive].l2 ||
            (block.candidates[i].l2 == block.candidates[*positive].l2 &&
             block.candidates[i].entity.entity_id <
                 block.candidates[*positive].entity.entity_id)) {
          positive = i;
        }
      }
    }
    if (positive) {
      rows.push_back({fvs[*positive], 1, block.mention.key(),
                      block.candidates[*positive].entity.entity_id});
    }

    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < block.candidates.size(); ++i) {
      if (block.candidates[i].entity.qid != block.mention.gold) negatives.push_back(i);
    }
    std::sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
      if (block.candidates[a].l2 != block.candidates[b].l2) {
        return block.candidates[a].l2 < block.candidates[b].l2;
      }
      return block.candidates[a].entity.entity_id < block.candidates[b].entity.entity_id;
    });

    const std::size_t n_neg = negatives.size();
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(c_neg_size), n_neg);
    std::set<std::size_t> picked;
    if (take == n_neg) {
      for (std::size_t i = 0; i < n_neg; ++i) picked.insert(i);
    } else if (take == 1) {
      picked.insert(static_cast<std::size_t>(
          std::llround(static_cast<double>(n_neg - 1) / 2.0)));
    } else if (take > 1) {
      for (std::size_t i = 0; i < take; ++i) {
        picked.insert(static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * static_cast<double>(n_neg - 1) /
                         static_cast<double>(take - 1))));
      }
    }
    for (std::size_t pos : picked) {
      const std::size_t i = negatives[pos];
      rows.push_back({fvs[i], 0, block.mention.key(),
                      block.candidates[i].entity.entity_id});
    }
  }
  return rows;
}

// --- feature dump (TSV) -------------------------------------------------------

inline void write_feature_tsv(const std::vector<LabeledRow>& rows,
                              const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (const std::string& name : features::feature_names()) out << name << '\t';
  out << "mention_id\tentity_id\tlabel\n";
  for (const LabeledRow& row : rows) {
    for (double v : row.fv.as_array()) out << v << '\t';
    out << row.mention_key << '\t' << row.entity_id << '\t' << row.label << '\n';
  }
  fs::write_file(path, out.str());
}

struct FeatureTable {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> mention_keys;
  std::vector<std::uint64_t> entity_ids;
};

inline FeatureTable read_feature_tsv(const std::string& path) {
  std::istringstream in(fs::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty feature file");
  FeatureTable table;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> parts;
    while (std::getline(cells, cell, '\t')) parts.push_back(cell);
    if (parts.size() != features::kFeatureCount + 3) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(features::kFeatureCount + 3) + " columns");
    }
    try {
      Row row;
      for (std::size_t i = 0; i < features::kFeatureCount; ++i) {
        row.push_back(std::stod(parts[i]));
      }
      table.x.push_back(std::move(row));
      table.mention_keys.push_back(parts[features::kFeatureCount]);
      table.entity_ids.push_back(std::stoull(parts[features::kFeatureCount + 1]));
      table.y.push_back(std::stoi(parts[features::kFeatureCount + 2]));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  return table;
}

}  // namespace delicate::gbt
