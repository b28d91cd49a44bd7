#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "trialenroll/evaluation.hpp"

using namespace trialenroll;

namespace {

MetricReport from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Vector s;
  std::vector<int> y;
  auto add = [&](std::size_t n, double score, int label) {
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(score);
      y.push_back(label);
    }
  };
  add(tp, 0.9, 1);
  add(fp, 0.9, 0);
  add(tn, 0.1, 0);
  add(fn, 0.1, 1);
  return classification_metrics(s, y, 0.5);
}

FeatureBundle row(const Vector& x, int y, std::size_t i) {
  FeatureBundle b;
  b.nct_id = "NCT" + std::to_string(10000000 + i);
  b.cross_input = x;
  b.label = y;
  return b;
}

}  // namespace

TEST(ClassificationMetrics, Perfect) {
  const auto r = from_counts(1, 0, 1, 0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(ClassificationMetrics, MixedCounts) {
  const auto r = from_counts(2, 1, 6, 1);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
  EXPECT_EQ(r.confusion, (ConfusionCounts{2, 1, 6, 1}));
}

TEST(ClassificationMetrics, NoPredictedPositives) {
  const auto r = from_counts(0, 0, 3, 2);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.6);
}

TEST(ClassificationMetrics, ThresholdIsInclusive) {
  const auto c = confusion_counts(Vector{0.5, 0.49}, std::vector<int>{1, 1}, 0.5);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_THROW(classification_metrics(Vector{0.5}, std::vector<int>{1}, 1.5), Error);
}

TEST(RocAuc, Examples) {
  const Vector s{.9, .8, .3, .2};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_EQ(roc_auc(s, y), 0.75);
  EXPECT_EQ(roc_auc(Vector{.9, .8, .3, .2}, std::vector<int>{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(roc_auc(Vector{.4, .4, .4}, std::vector<int>{1, 0, 1}), 0.5);
  EXPECT_THROW(roc_auc(Vector{.4, .3}, std::vector<int>{1, 1}), Error);
  EXPECT_THROW(roc_auc(Vector{}, std::vector<int>{}), Error);
}

TEST(PrAuc, Examples) {
  const Vector s{.9, .8, .3, .2};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(pr_auc(s, y), 1.0 * 0.5 + (2.0 / 3.0) * 0.5);
  EXPECT_EQ(pr_auc(Vector{.9, .8, .3, .2}, std::vector<int>{1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(pr_auc(Vector(5, 0.3), std::vector<int>{1, 0, 0, 1, 0}), 0.4);
  EXPECT_THROW(pr_auc(Vector{.4, .3}, std::vector<int>{0, 0}), Error);
}

TEST(Metrics, MatchBruteForceOracles) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    Vector s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6)) / 5.0;  // plenty of ties
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(roc_auc(s, y), oracle::roc_auc_pairs(s, y), 1e-12);
    EXPECT_NEAR(pr_auc(s, y), oracle::average_precision_thresholds(s, y), 1e-12);
  }
}

TEST(Metrics, ReportJsonCarriesAllFields) {
  const auto r = evaluate_predictions(Vector{.9, .8, .3, .2}, std::vector<int>{1, 0, 1, 0});
  const auto j = to_json(r);
  EXPECT_EQ(j["roc_auc"], 0.75);
  EXPECT_EQ(j["confusion"]["tp"], 1);
  EXPECT_NE(metric_table({{"DCN", r}}).find("PR-AUC"), std::string::npos);
}

TEST(Logistic, SeparableOneDimensional) {
  std::vector<Vector> rows;
  std::vector<int> y;
  for (int i = -10; i <= 10; ++i) {
    if (i == 0) continue;
    rows.push_back({static_cast<double>(i) / 5.0});
    y.push_back(i > 0 ? 1 : 0);
  }
  const auto m = logistic_baseline(rows, y);
  Vector s;
  for (double x : {-3.0, -0.5, -0.1, 0.1, 0.5, 3.0}) s.push_back(m.predict(Vector{x}));
  EXPECT_EQ(classification_metrics(s, std::vector<int>{0, 0, 0, 1, 1, 1}, 0.5).accuracy, 1.0);
}

TEST(Logistic, InitialLossIsLn2) {
  LogisticModel zero;
  zero.weights = {0, 0};
  const std::vector<Vector> rows{{1, 2}, {-1, 3}};
  EXPECT_NEAR(logistic_loss(zero, rows, std::vector<int>{1, 0}), std::log(2.0), 1e-15);
}

TEST(Logistic, DuplicatedColumnsGiveSamePredictions) {
  Rng rng(22);
  std::vector<Vector> single, doubled;
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    single.push_back({a, b});
    doubled.push_back({a, b, b});
    y.push_back(a + 0.5 * b + rng.uniform(-0.8, 0.8) > 0 ? 1 : 0);
  }
  const LogisticConfig cfg{0.5, 200000, 1e-11};
  const auto m1 = logistic_baseline(single, y, cfg);
  const auto m2 = logistic_baseline(doubled, y, cfg);
  EXPECT_LT(m1.iterations, cfg.max_iter);
  EXPECT_LT(m2.iterations, cfg.max_iter);
  EXPECT_EQ(m2.weights[1], m2.weights[2]);
  for (std::size_t i = 0; i < single.size(); ++i) {
    EXPECT_NEAR(m1.predict(single[i]), m2.predict(doubled[i]), 1e-8);
  }
  EXPECT_THROW(logistic_baseline(single, std::vector<int>(80, 1)), Error);
}

TEST(Importance, ConstantColumnHasZeroImportance) {
  Rng rng(23);
  std::vector<FeatureBundle> data;
  for (std::size_t i = 0; i < 60; ++i) {
    const double x = rng.uniform(-1, 1);
    data.push_back(row({x, 4.0}, x + rng.uniform(-0.5, 0.5) > 0 ? 1 : 0, i));
  }
  LogisticModel m;
  m.weights = {2.0, 0.7};
  const auto report = permutation_importance(
      logistic_scorer(m), data, {{"x", PermutationTarget::CrossColumns, 0, 1},
                                 {"constant", PermutationTarget::CrossColumns, 1, 1}},
      3, 5);
  ASSERT_EQ(report.groups.size(), 2u);
  EXPECT_EQ(report.groups[1].mean_drop, 0.0);
  EXPECT_EQ(report.groups[1].std_drop, 0.0);
  EXPECT_GT(report.groups[0].mean_drop, 0.0);
  for (const auto& g : report.groups) {
    EXPECT_EQ(g.drops.size(), 3u);
    EXPECT_GE(g.std_drop, 0.0);
  }
}

TEST(Importance, DeterminingGroupDropsToPrevalence) {
  Rng rng(24);
  std::vector<FeatureBundle> data;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < 2000; ++i) {
    const int y = rng.uniform() < 0.3 ? 1 : 0;
    positives += static_cast<std::size_t>(y);
    data.push_back(row({static_cast<double>(y), rng.uniform(-1, 1)}, y, i));
  }
  LogisticModel m;
  m.weights = {5.0, 0.0};
  m.bias = -2.5;
  const auto report = permutation_importance(
      logistic_scorer(m), data, {{"signal", PermutationTarget::CrossColumns, 0, 1}}, 5, 9);
  const double prevalence = static_cast<double>(positives) / 2000.0;
  EXPECT_EQ(report.baseline_pr_auc, 1.0);
  EXPECT_NEAR(report.groups[0].mean_drop, report.baseline_pr_auc - prevalence, 0.05);
}

TEST(Importance, GroupsFollowSchema) {
  SchemaOptions opt;
  opt.dimension = 2;
  const auto schema = detail::layout_schema({"France", "Spain"}, opt);
  const auto groups = permutation_groups(schema);
  ASSERT_EQ(groups.size(), schema.groups.size());
  EXPECT_EQ(groups[2].name, "geo");
  EXPECT_EQ(groups[2].width, 3u);
  const auto scalar = permutation_groups(schema, true, true);
  EXPECT_EQ(scalar.size(), schema.cross_width + 2);
  EXPECT_EQ(scalar.front().name, "gender[0]");
  EXPECT_EQ(scalar.back().target, PermutationTarget::ExclusionCriteria);
}

TEST(Importance, CriteriaPermutationMovesSentenceLists) {
  std::vector<FeatureBundle> data;
  for (std::size_t i = 0; i < 20; ++i) {
    auto b = row({0.0}, i % 2 == 0 ? 1 : 0, i);
    b.inclusion_words = {{{static_cast<double>(i % 2)}}};
    data.push_back(b);
  }
  const Scorer by_text = [](const std::vector<FeatureBundle>& bs) {
    Vector out;
    for (const auto& b : bs) out.push_back(b.inclusion_words.at(0).at(0).at(0) == 0.0 ? 0.9 : 0.1);
    return out;
  };
  const auto report = permutation_importance(
      by_text, data, {{"inclusion_criteria", PermutationTarget::InclusionCriteria, 0, 0},
                      {"exclusion_criteria", PermutationTarget::ExclusionCriteria, 0, 0}},
      3, 1);
  EXPECT_EQ(report.baseline_pr_auc, 1.0);
  EXPECT_GT(report.groups[0].mean_drop, 0.0);
  EXPECT_EQ(report.groups[1].mean_drop, 0.0);
}
