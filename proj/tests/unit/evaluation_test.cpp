#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error_code.hpp"
#include "fetalscreen/evaluation.hpp"
#include "fetalscreen/random.hpp"
#include "test_support.hpp"

namespace fetalscreen {
namespace {

using testing::code_of;
using testing::fill_rect;

using Strings = std::vector<std::string>;

ConfusionMatrix matrix(const Strings& classes, const std::vector<std::vector<std::size_t>>& counts) {
  Strings labels, preds;
  for (std::size_t a = 0; a < counts.size(); ++a)
    for (std::size_t p = 0; p < counts[a].size(); ++p)
      for (std::size_t k = 0; k < counts[a][p]; ++k) {
        labels.push_back(classes[a]);
        preds.push_back(classes[p]);
      }
  return confusion_matrix(labels, preds, classes);
}

// Independent oracles.

double pair_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

double count_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

// Two-sided exact p: share of all rank assignments at least as far from the null mean.
double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  const double mean = static_cast<double>(na * b.size()) / 2.0;
  const double observed = std::abs(count_u(a, b) - mean);
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  std::size_t extreme = 0, total = 0;
  do {
    std::vector<double> ga, gb;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? ga : gb).push_back(pooled[i]);
    ++total;
    if (std::abs(count_u(ga, gb) - mean) >= observed - 1e-12) ++extreme;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

TEST(Confusion, Fixtures) {
  const Strings classes{"A", "B", "C"};
  const auto perfect = confusion_matrix(Strings{"A", "B", "C", "A"}, Strings{"A", "B", "C", "A"}, classes);
  EXPECT_EQ(perfect.at(0, 0), 2u);
  EXPECT_EQ(perfect.at(0, 1) + perfect.at(1, 0) + perfect.at(2, 0), 0u);
  const auto cm = confusion_matrix(Strings{"A", "A", "B"}, Strings{"A", "B", "B"}, Strings{"A", "B"});
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(1, 1), 1u);
  EXPECT_EQ(cm.at(1, 0), 0u);
  EXPECT_EQ(cm.total(), 3u);
  EXPECT_EQ(code_of([&] { confusion_matrix(Strings{"A"}, Strings{"A", "B"}, classes); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { confusion_matrix(Strings{"Z"}, Strings{"A"}, classes); }), ErrorCode::UnknownClass);
}

TEST(FScore, Fixtures) {
  const Strings ab{"A", "B"};
  const auto perfect = matrix(ab, {{5, 0}, {0, 3}});
  EXPECT_DOUBLE_EQ(f_score(perfect, Averaging::Macro).value, 1.0);
  EXPECT_DOUBLE_EQ(f_score(perfect, Averaging::Weighted).value, 1.0);
  EXPECT_DOUBLE_EQ(f_score(matrix(ab, {{0, 4}, {2, 0}})).value, 0.0);

  const auto cm = matrix(ab, {{8, 2}, {1, 9}});
  const double pa = 8.0 / 9, ra = 8.0 / 10, pb = 9.0 / 11, rb = 9.0 / 10;
  const double fa = 2 * pa * ra / (pa + ra), fb = 2 * pb * rb / (pb + rb);
  const auto f = f_score(cm);
  EXPECT_NEAR(f.per_class[0].f1, 0.842, 5e-4);
  EXPECT_NEAR(f.per_class[1].f1, 0.857, 5e-4);
  EXPECT_NEAR(f.value, 0.850, 5e-4);
  EXPECT_NEAR(f.value, (fa + fb) / 2, 1e-12);
  EXPECT_NEAR(f_score(cm, Averaging::Weighted).value, (10 * fa + 10 * fb) / 20, 1e-12);
  EXPECT_EQ(f.per_class[0].support, 10u);
  EXPECT_EQ(code_of([] { f_score(ConfusionMatrix{}); }), ErrorCode::EmptyMatrix);
}

TEST(FScore, RelabelingInvariance) {
  Rng rng(12);
  const Strings classes{"p", "q", "r", "s"};
  for (int trial = 0; trial < 50; ++trial) {
    Strings labels, preds, labels2, preds2;
    const Strings renamed{"s", "p", "q", "r"};
    for (int i = 0; i < 40; ++i) {
      const auto a = rng.below(4), b = rng.below(4);
      labels.push_back(classes[a]);
      preds.push_back(classes[b]);
      labels2.push_back(renamed[a]);
      preds2.push_back(renamed[b]);
    }
    const auto f1 = f_score(confusion_matrix(labels, preds, classes)).value;
    const auto f2 = f_score(confusion_matrix(labels2, preds2, classes)).value;
    EXPECT_NEAR(f1, f2, 1e-12);
  }
}

TEST(Accuracies, Definitions) {
  const auto acc = accuracies(matrix({"A", "B", "C"}, {{3, 1, 0}, {0, 2, 2}, {0, 0, 0}}));
  EXPECT_DOUBLE_EQ(acc.overall, 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(acc.per_class[0], 0.75);
  EXPECT_DOUBLE_EQ(acc.per_class[1], 0.5);
  EXPECT_DOUBLE_EQ(acc.per_class[2], 0.0);
  EXPECT_DOUBLE_EQ(acc.average, 0.625);
}

TEST(Roc, Fixtures) {
  const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(roc_curve(s, std::vector<int>{1, 1, 0, 0}).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_curve(s, std::vector<int>{0, 0, 1, 1}).auc, 0.0);
  const std::vector<double> s4{0.35, 0.8, 0.1, 0.4};
  const std::vector<int> y4{1, 1, 0, 0};
  const auto roc = roc_curve(s4, y4);
  EXPECT_DOUBLE_EQ(roc.auc, 0.75);
  EXPECT_DOUBLE_EQ(c_statistic(s4, y4), 0.75);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.front().tpr, 0.0);
  EXPECT_TRUE(std::isinf(roc.points.front().threshold));
  EXPECT_EQ(roc.points.back().fpr, 1.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
  EXPECT_FALSE(roc_to_csv(roc).empty());

  EXPECT_EQ(code_of([&] { roc_curve(s, std::vector<int>{1, 1, 1, 1}); }), ErrorCode::SingleClass);
  EXPECT_EQ(code_of([&] { roc_curve(s, std::vector<int>{1, 0}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { roc_curve(s, std::vector<int>{1, 0, 2, 0}); }), ErrorCode::InvalidArgument);
}

TEST(CStatistic, TiesAndNoise) {
  EXPECT_DOUBLE_EQ(c_statistic(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 1, 0}), 0.5);
  Rng rng(21);
  std::vector<double> s(1000);
  std::vector<int> y(1000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    y[i] = rng.bernoulli(0.5);
  }
  EXPECT_NEAR(c_statistic(s, y), 0.5, 0.05);
}

TEST(CStatistic, MatchesTrapezoidAndPairOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      y[i] = static_cast<int>(i % 2 == 0 ? 1 : rng.below(2));
    }
    y[1] = 0;
    const double c = c_statistic(s, y);
    EXPECT_NEAR(c, roc_curve(s, y).auc, 1e-9);
    EXPECT_NEAR(c, pair_auc(s, y), 1e-12);
  }
  // With ties the midrank estimator still equals the pair count.
  std::vector<double> s{0.1, 0.5, 0.5, 0.5, 0.9, 0.1};
  std::vector<int> y{0, 1, 0, 1, 1, 1};
  EXPECT_NEAR(c_statistic(s, y), pair_auc(s, y), 1e-12);
  EXPECT_NEAR(roc_curve(s, y).auc, pair_auc(s, y), 1e-12);
}

TEST(Jaccard, Fixtures) {
  LabelMask a(10, 10, MaskSchema::Cardiothoracic), b(10, 10, MaskSchema::Cardiothoracic);
  fill_rect(a, 2, 2, 2, 2, ctr_label::kHeart);
  fill_rect(b, 3, 2, 2, 2, ctr_label::kHeart);
  const auto j = jaccard_index(a, b);
  EXPECT_EQ(*j.at(ctr_label::kHeart), 2.0 / 6.0);
  EXPECT_FALSE(j.at(ctr_label::kThorax).has_value());
  EXPECT_TRUE(j.at(ctr_label::kBackground).has_value());

  const auto same = jaccard_index(a, a);
  EXPECT_EQ(*same.at(ctr_label::kHeart), 1.0);
  EXPECT_EQ(*same.at(ctr_label::kBackground), 1.0);

  LabelMask c(10, 10, MaskSchema::Cardiothoracic);
  fill_rect(c, 6, 6, 2, 2, ctr_label::kHeart);
  EXPECT_EQ(*jaccard_index(a, c).at(ctr_label::kHeart), 0.0);

  EXPECT_EQ(code_of([&] { jaccard_index(a, LabelMask(9, 10, MaskSchema::Cardiothoracic)); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { jaccard_index(a, LabelMask(10, 10, MaskSchema::Axis)); }), ErrorCode::SchemaMismatch);
}

TEST(Rates, TwoByTwoFixtures) {
  const auto tof = diagnostic_rates(BinaryCounts{3, 1, 19, 6});
  EXPECT_DOUBLE_EQ(*tof.sensitivity, 0.75);
  EXPECT_DOUBLE_EQ(*tof.specificity, 0.76);
  const auto hlhs = diagnostic_rates(BinaryCounts{9, 0, 27, 3});
  EXPECT_DOUBLE_EQ(*hlhs.sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(*hlhs.specificity, 0.90);
  EXPECT_DOUBLE_EQ(*hlhs.accuracy, 36.0 / 39.0);
  EXPECT_DOUBLE_EQ(*hlhs.ppv, 0.75);
  EXPECT_DOUBLE_EQ(*hlhs.npv, 1.0);
}

TEST(Rates, UndefinedAndMatrixForm) {
  const auto r = diagnostic_rates(BinaryCounts{0, 0, 5, 1});
  EXPECT_FALSE(r.sensitivity.has_value());
  EXPECT_DOUBLE_EQ(*r.ppv, 0.0);
  const auto undefined = r.undefined_fields();
  EXPECT_NE(std::find(undefined.begin(), undefined.end(), "sensitivity"), undefined.end());

  // [actual][predicted] with classes normal, tof.
  const auto cm = matrix({"normal", "tof"}, {{19, 6}, {1, 3}});
  const auto m = diagnostic_rates(cm, "tof");
  EXPECT_EQ(m.counts.tp, 3u);
  EXPECT_EQ(m.counts.fp, 6u);
  EXPECT_DOUBLE_EQ(*m.specificity, 0.76);
  EXPECT_EQ(code_of([&] { diagnostic_rates(cm, "hlhs"); }), ErrorCode::UnknownClass);
  EXPECT_EQ(code_of([] { diagnostic_rates(matrix({"a", "b", "c"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), "a"); }),
            ErrorCode::InvalidArgument);
}

TEST(MannWhitney, Fixtures) {
  const auto r = mann_whitney_u(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  EXPECT_EQ(r.u_statistic, 0.0);
  EXPECT_NEAR(r.p_two_sided, 0.1, 1e-15);
  EXPECT_EQ(r.method, MwuMethod::Exact);
  const std::vector<double> same{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  EXPECT_GE(mann_whitney_u(same, same).p_two_sided, 0.99);
  EXPECT_EQ(code_of([] { mann_whitney_u(std::vector<double>{}, std::vector<double>{1}); }), ErrorCode::EmptySample);
  EXPECT_EQ(mann_whitney_u(same, same).method, MwuMethod::NormalApproximation);
}

TEST(MannWhitney, ExactMatchesEnumeration) {
  Rng rng(44);
  int cases = 0;
  for (std::size_t na = 1; na <= 9; ++na)
    for (std::size_t nb = 1; na + nb <= 10; ++nb)
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<double> pool(na + nb);
        std::iota(pool.begin(), pool.end(), 1.0);
        rng.shuffle(std::span(pool));
        const std::vector<double> a(pool.begin(), pool.begin() + static_cast<long>(na));
        const std::vector<double> b(pool.begin() + static_cast<long>(na), pool.end());
        const auto r = mann_whitney_u(a, b);
        EXPECT_EQ(r.method, MwuMethod::Exact);
        EXPECT_EQ(r.u_statistic, count_u(a, b));
        EXPECT_NEAR(r.p_two_sided, brute_force_p(a, b), 1e-12) << na << "+" << nb;
        ++cases;
      }
  EXPECT_GT(cases, 150);
}

TEST(MannWhitney, ExactAgreesWithNormalAtTwelve) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pool(12);
    for (auto& v : pool) v = rng.uniform();
    const std::size_t na = 4 + rng.below(5);
    const std::vector<double> a(pool.begin(), pool.begin() + static_cast<long>(na));
    const std::vector<double> b(pool.begin() + static_cast<long>(na), pool.end());
    const auto exact = mann_whitney_u(a, b);
    ASSERT_EQ(exact.method, MwuMethod::Exact);
    EXPECT_NEAR(mann_whitney_u_normal(a, b).p_two_sided, exact.p_two_sided, 0.03);
  }
}

TEST(MannWhitney, BridgeToCStatistic) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(1 + rng.below(30)), neg(1 + rng.below(30));
    for (auto& v : pos) v = std::round(rng.uniform() * 20) / 20;
    for (auto& v : neg) v = std::round(rng.uniform() * 20) / 20;
    std::vector<double> scores(pos);
    scores.insert(scores.end(), neg.begin(), neg.end());
    std::vector<int> labels(pos.size(), 1);
    labels.resize(scores.size(), 0);
    const auto r = mann_whitney_u(pos, neg);
    EXPECT_NEAR(r.u_statistic / static_cast<double>(pos.size() * neg.size()), c_statistic(scores, labels), 1e-9);
  }
}

TEST(MannWhitney, PureFunction) {
  const std::vector<double> a{0.3, 0.9, 0.1, 0.4, 0.44, 0.8, 0.2}, b{0.5, 0.6, 0.7, 0.05, 0.33, 0.12, 0.91};
  EXPECT_EQ(to_json(mann_whitney_u(a, b)), to_json(mann_whitney_u(a, b)));
  EXPECT_EQ(mann_whitney_u(a, b).p_two_sided, mann_whitney_u(b, a).p_two_sided);
}

}  // namespace
}  // namespace fetalscreen
