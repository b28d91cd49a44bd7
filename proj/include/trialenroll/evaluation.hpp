#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trialenroll/common.hpp"
#include "trialenroll/features.hpp"
#include "trialenroll/model.hpp"

namespace trialenroll {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricReport {
  double pr_auc = 0, roc_auc = 0, f1 = 0, precision = 0, recall = 0, accuracy = 0;
  double threshold = 0.5;
  ConfusionCounts confusion;
};

namespace detail {

inline void check_predictions(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "scores and labels differ in length");
  }
  if (scores.empty()) throw Error(ErrorKind::EmptyPredictions, "no predictions");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorKind::InvalidRecord, "labels must be 0 or 1");
  }
}

// Indices by descending score; equal scores stay adjacent.
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

inline ConfusionCounts confusion_counts(std::span<const double> scores, std::span<const int> labels,
                                        double threshold) {
  detail::check_predictions(scores, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

// Point metrics at `threshold` (score >= threshold predicts positive).
// A zero denominator yields 0 for precision, recall and F1.
inline MetricReport classification_metrics(std::span<const double> scores,
                                           std::span<const int> labels, double threshold = 0.5) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "threshold must be in [0, 1]");
  }
  MetricReport r;
  r.threshold = threshold;
  r.confusion = confusion_counts(scores, labels, threshold);
  const auto& c = r.confusion;
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = r.precision + r.recall == 0.0 ? 0.0
                                       : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  r.accuracy = ratio(c.tp + c.tn, c.total());
  return r;
}

// P(random positive scores above random negative), ties count one half.
// Computed from mid-ranks of the sorted scores.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_predictions(scores, labels);
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorKind::OneClassOnly, "roc_auc needs both classes");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) rank_sum += mid_rank;
    }
    i = j;
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

// Average precision: sum over descending tie blocks of
// precision-after-block * recall gained in the block.
inline double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_predictions(scores, labels);
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0) throw Error(ErrorKind::NoPositives, "pr_auc needs at least one positive");
  const auto idx = detail::descending_order(scores);
  double tp = 0, fp = 0, ap = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double block_pos = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? block_pos : fp) += 1;
      ++j;
    }
    tp += block_pos;
    if (block_pos > 0) ap += (tp / (tp + fp)) * (block_pos / pos);
    i = j;
  }
  return ap;
}

inline MetricReport evaluate_predictions(std::span<const double> scores, std::span<const int> labels,
                                         double threshold = 0.5) {
  MetricReport r = classification_metrics(scores, labels, threshold);
  r.pr_auc = pr_auc(scores, labels);
  r.roc_auc = roc_auc(scores, labels);
  return r;
}

inline nlohmann::json to_json(const MetricReport& r) {
  return {{"pr_auc", r.pr_auc},
          {"roc_auc", r.roc_auc},
          {"f1", r.f1},
          {"precision", r.precision},
          {"recall", r.recall},
          {"accuracy", r.accuracy},
          {"threshold", r.threshold},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp},
                         {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}}};
}

// Model | PR-AUC | ROC-AUC | F1 score | Precision | Recall | Accuracy
inline std::string metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::string out = "Model                PR-AUC  ROC-AUC  F1 score  Precision  Recall  Accuracy\n";
  char line[160];
  for (const auto& [name, r] : rows) {
    std::snprintf(line, sizeof line, "%-20s %6.4f  %7.4f  %8.4f  %9.4f  %6.4f  %8.4f\n",
                  name.c_str(), r.pr_auc, r.roc_auc, r.f1, r.precision, r.recall, r.accuracy);
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression on the cross input.

struct LogisticConfig {
  double lr = 0.5;
  std::size_t max_iter = 5000;
  double tolerance = 1e-6;  // on the full gradient norm
};

struct LogisticModel {
  Vector weights;
  double bias = 0.0;
  std::size_t iterations = 0;

  double logit(std::span<const double> x) const {
    double z = bias;
    for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
    return z;
  }
  double predict(std::span<const double> x) const { return sigmoid(logit(x)); }
  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

inline double logistic_loss(const LogisticModel& m, const std::vector<Vector>& rows,
                            std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) total += bce_with_logit(m.logit(rows[i]), labels[i]);
  return total / static_cast<double>(rows.size());
}

// Full-batch gradient descent on mean BCE from zero weights.
inline LogisticModel logistic_baseline(const std::vector<Vector>& rows, std::span<const int> labels,
                                       const LogisticConfig& cfg = {}) {
  if (rows.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "rows and labels");
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "no rows");
  const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
  if (!has_pos || !has_neg) throw Error(ErrorKind::SingleClassDataset, "logistic baseline needs both classes");
  const std::size_t width = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != width) throw Error(ErrorKind::RaggedLengths, "feature rows differ in width");
  }
  LogisticModel m;
  m.weights.assign(width, 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  Vector grad(width);
  for (m.iterations = 0; m.iterations < cfg.max_iter; ++m.iterations) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double r = (m.predict(rows[i]) - labels[i]) * inv_n;
      grad_b += r;
      for (std::size_t k = 0; k < width; ++k) grad[k] += r * rows[i][k];
    }
    double norm2 = grad_b * grad_b;
    for (double g : grad) norm2 += g * g;
    if (std::sqrt(norm2) < cfg.tolerance) break;
    m.bias -= cfg.lr * grad_b;
    for (std::size_t k = 0; k < width; ++k) m.weights[k] -= cfg.lr * grad[k];
  }
  return m;
}

inline nlohmann::json to_json(const LogisticModel& m) {
  return {{"weights", m.weights}, {"bias", m.bias}, {"iterations", m.iterations}};
}

inline LogisticModel logistic_from_json(const nlohmann::json& j) {
  LogisticModel m;
  m.weights = j.at("weights").get<Vector>();
  m.bias = j.at("bias").get<double>();
  m.iterations = j.value("iterations", std::size_t{0});
  return m;
}

// ---------------------------------------------------------------------------
// Permutation importance

// Scores every bundle; any model (DCN, logistic) can be wrapped as one.
using Scorer = std::function<Vector(const std::vector<FeatureBundle>&)>;

enum class PermutationTarget { CrossColumns, InclusionCriteria, ExclusionCriteria };

struct PermutationGroup {
  std::string name;
  PermutationTarget target = PermutationTarget::CrossColumns;
  std::size_t offset = 0;
  std::size_t width = 0;
};

// Schema groups (or single columns with `per_scalar`), optionally followed by
// the two criteria groups permuted as whole sentence lists.
inline std::vector<PermutationGroup> permutation_groups(const FeatureSchema& schema,
                                                        bool per_scalar = false,
                                                        bool include_criteria = false) {
  std::vector<PermutationGroup> out;
  for (const auto& g : schema.groups) {
    if (per_scalar) {
      for (std::size_t k = 0; k < g.width; ++k) {
        out.push_back({g.name + "[" + std::to_string(k) + "]", PermutationTarget::CrossColumns,
                       g.offset + k, 1});
      }
    } else {
      out.push_back({g.name, PermutationTarget::CrossColumns, g.offset, g.width});
    }
  }
  if (include_criteria) {
    out.push_back({"inclusion_criteria", PermutationTarget::InclusionCriteria, 0, 0});
    out.push_back({"exclusion_criteria", PermutationTarget::ExclusionCriteria, 0, 0});
  }
  return out;
}

struct ImportanceEntry {
  std::string group;
  double mean_drop = 0.0;
  double std_drop = 0.0;  // population standard deviation over repeats
  std::vector<double> drops;
};

struct ImportanceReport {
  double baseline_pr_auc = 0.0;
  std::size_t repeats = 0;
  std::vector<ImportanceEntry> groups;
};

inline std::vector<int> labels_of(const std::vector<FeatureBundle>& bundles) {
  std::vector<int> y;
  y.reserve(bundles.size());
  for (const auto& b : bundles) {
    if (!b.label) throw Error(ErrorKind::InvalidRecord, b.nct_id + ": unlabeled");
    y.push_back(*b.label);
  }
  return y;
}

// Row i of the permuted group takes its values from row perm[i]. Repeat r
// draws its permutation from Rng(seed + r).
inline ImportanceReport permutation_importance(const Scorer& score,
                                               const std::vector<FeatureBundle>& bundles,
                                               const std::vector<PermutationGroup>& groups,
                                               std::size_t repeats, std::uint64_t seed) {
  if (repeats < 1) throw Error(ErrorKind::InvalidConfig, "repeats must be >= 1");
  const auto labels = labels_of(bundles);
  ImportanceReport report;
  report.repeats = repeats;
  report.baseline_pr_auc = pr_auc(score(bundles), labels);
  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t r = 0; r < repeats; ++r) {
    std::vector<std::size_t> perm(bundles.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed + r);
    rng.shuffle(perm);
    perms.push_back(std::move(perm));
  }
  for (const auto& g : groups) {
    ImportanceEntry entry;
    entry.group = g.name;
    for (const auto& perm : perms) {
      std::vector<FeatureBundle> shuffled = bundles;
      for (std::size_t i = 0; i < bundles.size(); ++i) {
        const FeatureBundle& src = bundles[perm[i]];
        switch (g.target) {
          case PermutationTarget::CrossColumns:
            std::copy_n(src.cross_input.begin() + static_cast<std::ptrdiff_t>(g.offset), g.width,
                        shuffled[i].cross_input.begin() + static_cast<std::ptrdiff_t>(g.offset));
            break;
          case PermutationTarget::InclusionCriteria:
            shuffled[i].inclusion_words = src.inclusion_words;
            break;
          case PermutationTarget::ExclusionCriteria:
            shuffled[i].exclusion_words = src.exclusion_words;
            break;
        }
      }
      entry.drops.push_back(report.baseline_pr_auc - pr_auc(score(shuffled), labels));
    }
    const double n = static_cast<double>(entry.drops.size());
    entry.mean_drop = std::accumulate(entry.drops.begin(), entry.drops.end(), 0.0) / n;
    double var = 0.0;
    for (double d : entry.drops) var += (d - entry.mean_drop) * (d - entry.mean_drop);
    entry.std_drop = std::sqrt(var / n);
    report.groups.push_back(std::move(entry));
  }
  return report;
}

inline nlohmann::json to_json(const ImportanceReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"group", g.group}, {"mean_drop", g.mean_drop},
                      {"std_drop", g.std_drop}, {"drops", g.drops}});
  }
  return {{"baseline_pr_auc", r.baseline_pr_auc}, {"repeats", r.repeats}, {"groups", groups}};
}

inline Scorer dcn_scorer(const ModelParams& params) {
  return [&params](const std::vector<FeatureBundle>& bundles) {
    Vector out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) out.push_back(forward(b, params).probability);
    return out;
  };
}

inline Scorer logistic_scorer(const LogisticModel& model) {
  return [&model](const std::vector<FeatureBundle>& bundles) {
    Vector out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) {
      if (b.cross_input.size() != model.weights.size()) {
        throw Error(ErrorKind::DimensionMismatch, b.nct_id + ": cross input width");
      }
      out.push_back(model.predict(b.cross_input));
    }
    return out;
  };
}

}  // namespace trialenroll
