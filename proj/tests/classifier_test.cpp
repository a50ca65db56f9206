#include <gtest/gtest.h>

#include <random>

#include "sybilwatch/classifier.hpp"

using namespace sybilwatch;

namespace {

// Pairwise count of correctly ordered (sybil, benign) margins, ties half.
double oracle_auc(const std::vector<double>& m, const std::vector<Label>& y) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (y[i] == Label::kSybil && y[j] == Label::kBenign) {
        pairs += 1;
        good += m[i] > m[j] ? 1.0 : (m[i] == m[j] ? 0.5 : 0.0);
      }
  return good / pairs;
}

std::vector<LabeledExample> toy_separable() {
  std::vector<LabeledExample> d;
  for (int i = 0; i < 5; ++i) {
    d.push_back({"community " + std::to_string(i), {0.1 * i, 0.2, 0.1}, Label::kBenign});
    d.push_back({"community " + std::to_string(i + 5), {5.0 + 0.1 * i, 4.8, 5.1}, Label::kSybil});
  }
  return d;
}

}  // namespace

TEST(Classifier, SeparableToyScoresPerfectly) {
  auto data = toy_separable();
  auto r = train(data, SvmParams{}, 5, 42);
  EXPECT_DOUBLE_EQ(r.cv.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.cv.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.cv.recall, 1.0);
  ASSERT_TRUE(r.cv.auc.has_value());
  EXPECT_DOUBLE_EQ(*r.cv.auc, 1.0);
  for (const auto& e : data) EXPECT_EQ(r.model.predict(e.features).first, e.label);
}

TEST(Classifier, SingleClassRejected) {
  auto data = toy_separable();
  for (auto& e : data) e.label = Label::kSybil;
  EXPECT_THROW(train(data, SvmParams{}, 5, 1), ValidationError);
}

TEST(Classifier, NonFiniteFeatureNamesCommunity) {
  auto data = toy_separable();
  data[3].features[1] = std::nan("");
  try {
    train(data, SvmParams{}, 5, 1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(data[3].name), std::string::npos);
  }
}

TEST(Classifier, AucMatchesPairwiseCount) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> m;
    std::vector<Label> y;
    for (int i = 0; i < 30; ++i) {
      m.push_back(static_cast<double>(rng() % 7));  // many ties
      y.push_back(rng() % 2 ? Label::kSybil : Label::kBenign);
    }
    y[0] = Label::kSybil;
    y[1] = Label::kBenign;
    EXPECT_NEAR(*auc_from_margins(m, y), oracle_auc(m, y), 1e-12);
  }
  EXPECT_FALSE(auc_from_margins(std::vector<double>{1, 2}, std::vector<Label>{Label::kSybil, Label::kSybil}));
}

TEST(Classifier, ConstantPredictionOnBalancedSet) {
  std::vector<Label> truth = {Label::kSybil, Label::kSybil, Label::kBenign, Label::kBenign};
  std::vector<Label> pred(4, Label::kSybil);
  std::vector<double> margins(4, 1.0);
  auto m = evaluate(pred, truth, margins);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.25);  // 0.5 * 0.5 + 0.5 * 0
  EXPECT_NEAR(m.f1, 0.5 * (2 * 0.5 / 1.5), 1e-15);
  EXPECT_DOUBLE_EQ(*m.auc, 0.5);
}

TEST(Classifier, RandomMarginsNearChance) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  std::vector<double> m;
  std::vector<Label> y;
  for (int i = 0; i < 20000; ++i) {
    m.push_back(n01(rng));
    y.push_back(i % 2 ? Label::kSybil : Label::kBenign);
  }
  EXPECT_NEAR(*auc_from_margins(m, y), 0.5, 0.05);
}

TEST(Classifier, SymmetricDataGivesSmallMarginAtOrigin) {
  std::vector<LabeledExample> d;
  for (int i = 0; i < 6; ++i) {
    const double x = 1.0 + 0.25 * i;
    d.push_back({"b" + std::to_string(i), {-x, -x}, Label::kBenign});
    d.push_back({"s" + std::to_string(i), {x, x}, Label::kSybil});
  }
  auto r = train(d, SvmParams{}, 3, 7);
  EXPECT_LT(std::abs(r.model.decision(std::vector<double>{0.0, 0.0})), 0.1);
}

TEST(Classifier, LargeCMemorizesTrainingSet) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> x;
  std::vector<Label> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back({u(rng), u(rng), u(rng)});
    y.push_back(i % 2 ? Label::kSybil : Label::kBenign);
  }
  SvmParams p;
  p.c = 1e6;
  p.gamma = 10.0;
  auto m = fit_svm(x, y, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(m.predict(x[i]).first, y[i]);
  EXPECT_FALSE(m.support.empty());
  EXPECT_EQ(m.support.size(), m.coef.size());
}

TEST(Classifier, StratifiedFoldsBalanceClasses) {
  std::vector<Label> y;
  for (int i = 0; i < 23; ++i) y.push_back(i < 13 ? Label::kSybil : Label::kBenign);
  auto f = stratified_folds(y, 5, 3);
  for (int k = 0; k < 5; ++k) {
    int s = 0, b = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (f[i] == k) (y[i] == Label::kSybil ? s : b)++;
    EXPECT_GE(s, 2);
    EXPECT_LE(s, 3);
    EXPECT_GE(b, 1);
    EXPECT_LE(b, 3);
  }
  EXPECT_EQ(f, stratified_folds(y, 5, 3));
}

TEST(Classifier, StandardizerHandlesConstantColumn) {
  std::vector<std::vector<double>> rows = {{1, 5}, {3, 5}};
  auto s = Standardizer::fit(rows);
  auto z = s.apply(rows[0]);
  EXPECT_DOUBLE_EQ(z[0], -1.0);
  EXPECT_TRUE(std::isfinite(z[1]));
}

TEST(Classifier, LabelNames) {
  EXPECT_EQ(parse_label("sybil"), Label::kSybil);
  EXPECT_EQ(parse_label("benign"), Label::kBenign);
  EXPECT_THROW(parse_label("maybe"), ValidationError);
}
