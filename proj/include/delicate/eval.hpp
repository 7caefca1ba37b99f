#pragma once

// Scoring and explainability: disambiguation accuracy, end-to-end span
// matching in exact and fuzzy regimes, permutation feature importance and
// point-biserial score/correctness correlation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "delicate/error.hpp"
#include "delicate/gbt.hpp"
#include "delicate/rng.hpp"
#include "delicate/text.hpp"
#include "delicate/types.hpp"

namespace delicate::eval {

// --- entity disambiguation accuracy -----------------------------------------

struct EdExample {
  std::string mention_key;
  std::string decision;  // QID or NIL
};

struct EdReport {
  double micro_accuracy = 0.0;
  double macro_accuracy = 0.0;
  std::map<EntityType, double> per_class;
  std::map<EntityType, std::size_t> class_counts;
  std::size_t n = 0;
};

// A prediction is correct iff it names the gold QID, or both sides are NIL.
// Predictions and gold mentions must align one-to-one by mention key.
inline EdReport ed_accuracy(const std::vector<EdExample>& predictions,
                            const std::vector<Mention>& gold) {
  if (predictions.size() != gold.size()) {
    throw AlignmentError("ed_accuracy: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(gold.size()) +
                         " gold mentions");
  }
  std::unordered_map<std::string, const EdExample*> by_key;
  for (const EdExample& p : predictions) {
    if (!by_key.emplace(p.mention_key, &p).second) {
      throw AlignmentError("ed_accuracy: duplicate prediction for " + p.mention_key);
    }
  }

  EdReport report;
  report.n = gold.size();
  std::map<EntityType, std::size_t> correct_per_class;
  std::size_t correct_total = 0;
  for (const Mention& m : gold) {
    const auto it = by_key.find(m.key());
    if (it == by_key.end()) {
      throw AlignmentError("ed_accuracy: no prediction for mention " + m.key());
    }
    report.class_counts[m.etype] += 1;
    if (it->second->decision == m.gold) {
      correct_per_class[m.etype] += 1;
      ++correct_total;
    }
  }
  report.micro_accuracy =
      gold.empty() ? 0.0
                   : static_cast<double>(correct_total) / static_cast<double>(gold.size());
  double macro_sum = 0.0;
  for (const auto& [etype, count] : report.class_counts) {
    const double acc =
        static_cast<double>(correct_per_class[etype]) / static_cast<double>(count);
    report.per_class[etype] = acc;
    macro_sum += acc;
  }
  if (!report.class_counts.empty()) {
    report.macro_accuracy = macro_sum / static_cast<double>(report.class_counts.size());
  }
  return report;
}

// --- end-to-end precision/recall/F1 ------------------------------------------

enum class MatchMode { Exact, Fuzzy };
enum class OverlapUnit { Characters, Tokens };

struct Span {
  std::string doc_id;
  int start = 0;
  int end = 0;
  std::string decision;  // QID or NIL
};

struct E2eReport {
  MatchMode mode = MatchMode::Exact;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

namespace detail {

inline long char_overlap(const Span& a, const Span& b) {
  return std::max<long>(0, std::min<long>(a.end, b.end) - std::max<long>(a.start, b.start));
}

// Number of whole document tokens touched by both spans.
inline long token_overlap(const Span& a, const Span& b,
                          const std::vector<text::TokenSpan>& tokens) {
  long shared = 0;
  for (const text::TokenSpan& t : tokens) {
    const long ts = static_cast<long>(t.begin);
    const long te = static_cast<long>(t.end);
    const bool in_a = std::min<long>(a.end, te) > std::max<long>(a.start, ts);
    const bool in_b = std::min<long>(b.end, te) > std::max<long>(b.start, ts);
    if (in_a && in_b) ++shared;
  }
  return shared;
}

}  // namespace detail

// Greedy one-to-one span matching, highest overlap first. Exact mode
// requires identical boundaries; fuzzy mode any positive overlap. A matched
// pair counts as TP only when the decisions agree (NIL included); matched
// pairs with a wrong identifier contribute FP + FN like unmatched spans.
// `doc_texts` is only consulted for the token overlap unit.
inline E2eReport e2e_metrics(
    const std::vector<Span>& predictions, const std::vector<Span>& gold, MatchMode mode,
    OverlapUnit unit = OverlapUnit::Characters,
    const std::map<std::string, std::string>* doc_texts = nullptr) {
  // Overlapping predictions inside one document are malformed input.
  {
    std::map<std::string, std::vector<const Span*>> per_doc;
    for (const Span& p : predictions) per_doc[p.doc_id].push_back(&p);
    for (auto& [doc, spans] : per_doc) {
      std::sort(spans.begin(), spans.end(),
                [](const Span* a, const Span* b) { return a->start < b->start; });
      for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i - 1]->end > spans[i]->start) {
          throw ValidationError("e2e_metrics: overlapping predictions in document " + doc);
        }
      }
    }
  }

  std::map<std::string, std::vector<text::TokenSpan>> tokens_by_doc;
  if (unit == OverlapUnit::Tokens) {
    if (doc_texts == nullptr) {
      throw ValidationError("e2e_metrics: token overlap requires document texts");
    }
    for (const auto& [doc, txt] : *doc_texts) tokens_by_doc[doc] = text::token_spans(txt);
  }

  struct Pair {
    long overlap;
    std::size_t pred;
    std::size_t gold;
  };
  std::vector<Pair> pairs;
  for (std::size_t pi = 0; pi < predictions.size(); ++pi) {
    for (std::size_t gi = 0; gi < gold.size(); ++gi) {
      const Span& p = predictions[pi];
      const Span& g = gold[gi];
      if (p.doc_id != g.doc_id) continue;
      if (mode == MatchMode::Exact) {
        if (p.start != g.start || p.end != g.end) continue;
        pairs.push_back({static_cast<long>(p.end - p.start), pi, gi});
      } else {
        long overlap = 0;
        if (unit == OverlapUnit::Characters) {
          overlap = detail::char_overlap(p, g);
        } else {
          const auto it = tokens_by_doc.find(p.doc_id);
          if (it != tokens_by_doc.end()) overlap = detail::token_overlap(p, g, it->second);
        }
        if (overlap > 0) pairs.push_back({overlap, pi, gi});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    const Span& pa = predictions[a.pred];
    const Span& pb = predictions[b.pred];
    if (pa.doc_id != pb.doc_id) return pa.doc_id < pb.doc_id;
    if (pa.start != pb.start) return pa.start < pb.start;
    const Span& ga = gold[a.gold];
    const Span& gb = gold[b.gold];
    if (ga.start != gb.start) return ga.start < gb.start;
    return std::tie(pa.end, ga.end) < std::tie(pb.end, gb.end);
  });

  std::vector<bool> pred_used(predictions.size(), false);
  std::vector<bool> gold_used(gold.size(), false);
  std::size_t tp = 0;
  for (const Pair& pair : pairs) {
    if (pred_used[pair.pred] || gold_used[pair.gold]) continue;
    pred_used[pair.pred] = true;
    gold_used[pair.gold] = true;
    if (predictions[pair.pred].decision == gold[pair.gold].decision) ++tp;
  }

  E2eReport report;
  report.mode = mode;
  report.tp = tp;
  report.fp = predictions.size() - tp;
  report.fn = gold.size() - tp;
  if (!predictions.empty()) {
    report.precision = static_cast<double>(tp) / static_cast<double>(predictions.size());
  }
  if (!gold.empty()) {
    report.recall = static_cast<double>(tp) / static_cast<double>(gold.size());
  }
  if (report.precision + report.recall > 0.0) {
    report.f1 = 2.0 * report.precision * report.recall /
                (report.precision + report.recall);
  }
  return report;
}

// --- permutation importance ---------------------------------------------------

using Metric = std::function<double(const gbt::GbtModel&, const gbt::Matrix&,
                                    const std::vector<int>&)>;

// Candidate-pair classification accuracy at probability 0.5, the default
// importance metric.
inline double pair_accuracy(const gbt::GbtModel& model, const gbt::Matrix& x,
                            const std::vector<int>& y) {
  if (x.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int predicted = model.predict_proba(x[i]) >= 0.5 ? 1 : 0;
    if (predicted == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.size());
}

// Disambiguation-style alternative: rows grouped per mention, a group counts
// as correct when the argmax-probability row is a positive (groups without a
// positive count when every probability stays under 0.5).
inline Metric make_block_accuracy_metric(const std::vector<std::string>& mention_keys) {
  return [mention_keys](const gbt::GbtModel& model, const gbt::Matrix& x,
                        const std::vector<int>& y) {
    if (x.size() != mention_keys.size()) {
      throw ValidationError("block metric: row count does not match mention keys");
    }
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < x.size(); ++i) groups[mention_keys[i]].push_back(i);
    std::size_t correct = 0;
    for (const auto& [key, rows] : groups) {
      std::size_t best = rows[0];
      double best_p = -1.0;
      bool has_positive = false;
      for (std::size_t i : rows) {
        const double p = model.predict_proba(x[i]);
        has_positive = has_positive || y[i] == 1;
        if (p > best_p) {
          best_p = p;
          best = i;
        }
      }
      if (has_positive ? y[best] == 1 : best_p < 0.5) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(groups.size());
  };
}

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> mean_drop;
  std::vector<double> sd;
  double baseline = 0.0;
  int n_reps = 0;
};

// Shuffles one feature column at a time with an independent draw derived
// from (seed, feature, repetition) and reports the mean metric drop and its
// standard deviation over repetitions.
inline ImportanceReport permutation_importance(const gbt::GbtModel& model,
                                               const gbt::Matrix& x,
                                               const std::vector<int>& y, Metric metric,
                                               int n_reps, std::uint64_t seed) {
  if (n_reps < 1) throw ValidationError("permutation_importance: n_reps must be >= 1");
  if (x.size() != y.size()) {
    throw ValidationError("permutation_importance: X and y row counts differ");
  }
  if (x.empty()) throw ValidationError("permutation_importance: empty matrix");
  if (!metric) metric = pair_accuracy;

  const std::size_t n = x.size();
  const std::size_t n_features = x[0].size();
  ImportanceReport report;
  report.feature_names = model.feature_names();
  report.n_reps = n_reps;
  report.baseline = metric(model, x, y);
  report.mean_drop.assign(n_features, 0.0);
  report.sd.assign(n_features, 0.0);

  gbt::Matrix work = x;
  std::vector<double> column(n);
  for (std::size_t f = 0; f < n_features; ++f) {
    std::vector<double> drops;
    drops.reserve(static_cast<std::size_t>(n_reps));
    for (int rep = 0; rep < n_reps; ++rep) {
      for (std::size_t i = 0; i < n; ++i) column[i] = x[i][f];
      rng::SplitMix64 column_rng(
          rng::mix(seed, static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(rep)));
      rng::shuffle(column, column_rng);
      for (std::size_t i = 0; i < n; ++i) work[i][f] = column[i];
      drops.push_back(report.baseline - metric(model, work, y));
    }
    for (std::size_t i = 0; i < n; ++i) work[i][f] = x[i][f];

    double mean = 0.0;
    for (double d : drops) mean += d;
    mean /= static_cast<double>(drops.size());
    double var = 0.0;
    for (double d : drops) var += (d - mean) * (d - mean);
    report.mean_drop[f] = mean;
    report.sd[f] = drops.size() > 1
                       ? std::sqrt(var / static_cast<double>(drops.size() - 1))
                       : 0.0;
  }
  return report;
}

// --- point-biserial correlation -------------------------------------------------

struct CorrelationReport {
  double r_pb = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

namespace detail {

// Continued-fraction core of the regularized incomplete beta function
// (modified Lentz); converges quickly for the t-distribution arguments here.
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

inline double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value of a Student-t statistic with nu degrees of freedom.
inline double student_t_two_sided_p(double t, double nu) {
  if (!std::isfinite(t)) return 0.0;
  return detail::reg_inc_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

// r_pb = (M1 - M0) / s_n * sqrt(p*q) with the population standard deviation,
// which coincides with the Pearson correlation of scores against the 0/1
// encoding. Significance via the exact t CDF.
inline CorrelationReport point_biserial(const std::vector<double>& scores,
                                        const std::vector<int>& correct) {
  if (scores.size() != correct.size()) {
    throw ValidationError("point_biserial: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  if (n < 3) throw ValidationError("point_biserial: need at least 3 samples");

  std::size_t n1 = 0;
  double sum1 = 0.0;
  double sum0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (correct[i] == 1) {
      ++n1;
      sum1 += scores[i];
    } else {
      sum0 += scores[i];
    }
  }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) {
    throw UndefinedCorrelationError(
        "point_biserial: correctness labels are single-class");
  }

  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd_pop = std::sqrt(var / static_cast<double>(n));
  if (sd_pop <= 0.0) {
    throw UndefinedCorrelationError("point_biserial: scores have zero variance");
  }

  const double m1 = sum1 / static_cast<double>(n1);
  const double m0 = sum0 / static_cast<double>(n0);
  const double p = static_cast<double>(n1) / static_cast<double>(n);
  const double q = static_cast<double>(n0) / static_cast<double>(n);

  CorrelationReport report;
  report.n = n;
  report.r_pb = (m1 - m0) / sd_pop * std::sqrt(p * q);
  const double r2 = report.r_pb * report.r_pb;
  if (r2 >= 1.0) {
    report.p_value = 0.0;
  } else {
    const double t = report.r_pb *
                     std::sqrt(static_cast<double>(n - 2) / (1.0 - r2));
    report.p_value = student_t_two_sided_p(t, static_cast<double>(n - 2));
  }
  return report;
}

// --- report serialization --------------------------------------------------------

inline nlohmann::json to_json(const EdReport& r) {
  nlohmann::json j;
  j["micro_accuracy"] = r.micro_accuracy;
  j["macro_accuracy"] = r.macro_accuracy;
  j["n"] = r.n;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [etype, acc] : r.per_class) {
    per_class[to_string(etype)] = {{"accuracy", acc}, {"n", r.class_counts.at(etype)}};
  }
  j["per_class"] = std::move(per_class);
  return j;
}

inline nlohmann::json to_json(const E2eReport& r) {
  return {{"mode", r.mode == MatchMode::Exact ? "exact" : "fuzzy"},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn}};
}

inline nlohmann::json to_json(const ImportanceReport& r) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < r.feature_names.size(); ++i) {
    features.push_back({{"feature", r.feature_names[i]},
                        {"mean_drop", r.mean_drop[i]},
                        {"sd", r.sd[i]}});
  }
  return {{"baseline", r.baseline}, {"n_reps", r.n_reps}, {"features", features}};
}

inline nlohmann::json to_json(const CorrelationReport& r) {
  return {{"r_pb", r.r_pb}, {"p_value", r.p_value}, {"n", r.n}};
}

// Per-class accuracy rows in the layout of the published results tables.
inline std::string render_ed_table(const EdReport& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "Class   Acc      n\n";
  for (const auto& [etype, acc] : r.per_class) {
    out << to_string(etype);
    for (std::size_t pad = std::string(to_string(etype)).size(); pad < 8; ++pad) out << ' ';
    out << 100.0 * acc << "  " << r.class_counts.at(etype) << "\n";
  }
  out << "micro   " << 100.0 * r.micro_accuracy << "  " << r.n << "\n";
  out << "macro   " << 100.0 * r.macro_accuracy << "\n";
  return out.str();
}

}  // namespace delicate::eval
