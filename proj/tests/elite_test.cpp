#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sybilwatch/elite.hpp"

using namespace sybilwatch;
using fx::rv;

namespace {

CommunityWindows windows_of(CommunityId c, std::vector<std::pair<Timestamp, double>> spans) {
  CommunityWindows cw;
  cw.community = c;
  for (auto [start, w] : spans) cw.windows.push_back({0, start, start + 7 * kSecondsPerDay - 1, 1, w});
  return cw;
}

}  // namespace

TEST(WindowWeights, NormalizeByMax) {
  EXPECT_EQ(normalize_window_counts(std::vector<std::size_t>{10}), (std::vector<double>{1.0}));
  EXPECT_EQ(normalize_window_counts(std::vector<std::size_t>{10, 5}), (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(normalize_window_counts(std::vector<std::size_t>{4, 8, 2}), (std::vector<double>{0.5, 1.0, 0.25}));
  EXPECT_EQ(normalize_window_counts(std::vector<std::size_t>{0, 0}), (std::vector<double>{0.0, 0.0}));
}

TEST(WindowWeights, ScaleInvariant) {
  std::vector<std::size_t> a = {3, 7, 1, 4}, b;
  for (auto v : a) b.push_back(v * 6);
  EXPECT_EQ(normalize_window_counts(a), normalize_window_counts(b));
}

TEST(WindowWeights, CountsOnlyNonMembers) {
  // member m and outsiders x, y review s0 inside the campaign window
  auto ds = ReviewDataset::build({rv("r1", "m", "s0", fx::day(1), 5), rv("r2", "x", "s0", fx::day(2), 5),
                                  rv("r3", "y", "s0", fx::day(3), 4), rv("r4", "x", "s0", fx::day(30), 5)},
                                 fx::plain_stores(1));
  std::vector<CommunityId> assign = {0, 1, 2};  // m, x, y
  Campaign c{0, 0, 0, 0, fx::day(0), fx::day(7) - 1, 1};
  auto cw = window_weights(0, std::vector<Campaign>{c}, ds, assign);
  ASSERT_TRUE(cw);
  EXPECT_EQ(cw->windows[0].count, 2u);
  EXPECT_DOUBLE_EQ(cw->windows[0].weight, 1.0);
  auto none = window_weights(0, std::vector<Campaign>{{0, 0, 0, 0, fx::day(20), fx::day(27) - 1, 1}}, ds, assign);
  EXPECT_FALSE(none);
}

TEST(WeightedCount, Examples) {
  auto ds = ReviewDataset::build({rv("r1", "u", "s0", fx::day(1), 5), rv("r2", "u", "s0", fx::day(2), 5),
                                  rv("r3", "u", "s0", fx::day(8), 5), rv("r4", "v", "s0", fx::day(40), 5)},
                                 fx::plain_stores(1));
  auto cw = windows_of(0, {{fx::day(0), 0.5}, {fx::day(7), 1.0}});
  EXPECT_DOUBLE_EQ(weighted_count(0, cw, ds), 2.0);  // 2 * 0.5 + 1 * 1.0
  EXPECT_DOUBLE_EQ(weighted_count(1, cw, ds), 0.0);
  auto one = windows_of(0, {{fx::day(7), 1.0}});
  EXPECT_DOUBLE_EQ(weighted_count(0, one, ds), 1.0);
}

TEST(ParticipationRate, Sigmoid) {
  EXPECT_DOUBLE_EQ(participation_rate(3.0, 3.0, 2.0), 0.5);
  EXPECT_NEAR(participation_rate(5.0, 3.0, 2.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(participation_rate(5.0, 3.0, 2.0), 0.7311, 1e-4);
  double prev = 0.0;
  for (double n = 0; n < 40; n += 0.5) {
    const double r = participation_rate(n, 3.0, 2.0);
    EXPECT_GT(r, prev);
    prev = r;
  }
  EXPECT_GT(participation_rate(1e6, 3.0, 2.0), 0.999);
  // zero spread falls back to the floor
  EXPECT_GT(participation_rate(3.1, 3.0, 0.0), 0.999);
  EXPECT_LT(participation_rate(2.9, 3.0, 0.0), 0.001);
}

TEST(PopulationStats, PopulationStdDev) {
  auto s = population_stats(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.stddev, 2.0);
}

TEST(Sybilness, Examples) {
  EXPECT_DOUBLE_EQ(sybilness(std::vector<CommunityParticipation>{{0, 1.0, 0.5}}), 0.5);
  EXPECT_NEAR(sybilness(std::vector<CommunityParticipation>{{0, 2.0, 0.8}, {1, 1.0, 0.6}}), 2.2, 1e-15);
  EXPECT_DOUBLE_EQ(sybilness(std::vector<CommunityParticipation>{}), 0.0);
}

TEST(ClassifyElite, Criterion) {
  auto ds = ReviewDataset::build({rv("r1", "a", "s0", 0, 5), rv("r2", "b", "s0", 0, 5), rv("r3", "c", "s0", 0, 5),
                                  rv("r4", "d", "s0", 0, 5)},
                                 fx::plain_stores(1));
  std::vector<EliteScore> cand(4);
  cand[0] = {0, {{1, 3.0, 0.9}}, 2.7, true, false};   // member elsewhere
  cand[1] = {1, {{1, 1.0, 0.4}}, 0.4, false, false};  // below cutoff
  cand[2] = {2, {{1, 1.0, 0.6}}, 0.6, false, false};
  cand[3] = {3, {{0, 2.0, 0.3}, {1, 1.0, 0.7}}, 1.3, false, false};
  auto elite = classify_elite(cand, ds, 0.5);
  ASSERT_EQ(elite.size(), 2u);
  EXPECT_EQ(elite[0].user, 3u);
  EXPECT_EQ(elite[1].user, 2u);
  EXPECT_TRUE(elite[0].is_elite);
  // exactly at the cutoff is not elite
  cand[2].communities[0].rho = 0.5;
  EXPECT_EQ(classify_elite(cand, ds, 0.5).size(), 1u);
}

TEST(ClassifyElite, TiesRankByUserId) {
  auto ds = ReviewDataset::build({rv("r1", "zed", "s0", 0, 5), rv("r2", "amy", "s0", 0, 5)}, fx::plain_stores(1));
  std::vector<EliteScore> cand = {{1, {{0, 1.0, 0.9}}, 0.9, false, false}, {0, {{0, 1.0, 0.9}}, 0.9, false, false}};
  auto elite = classify_elite(cand, ds, 0.5);
  EXPECT_EQ(ds.user_id(elite[0].user), "amy");
}

TEST(AnnotateReview, ProductAndOverlapMax) {
  auto ds = ReviewDataset::build({rv("r1", "u", "s0", fx::day(2), 5), rv("r2", "u", "s0", fx::day(30), 5)},
                                 fx::plain_stores(1));
  std::vector<CommunityWindows> ws = {windows_of(0, {{fx::day(0), 0.5}}), windows_of(1, {{fx::day(1), 0.9}})};
  EliteScore s{0, {{0, 1.0, 0.5}, {1, 1.0, 0.4}}, 0.0, false, false};
  EXPECT_DOUBLE_EQ(annotate_review(0, ds, std::vector<CommunityWindows>{ws[0]}, s), 0.25);
  EXPECT_DOUBLE_EQ(annotate_review(0, ds, ws, s), std::max(0.25, 0.4 * 0.9));
  EXPECT_DOUBLE_EQ(annotate_review(1, ds, ws, s), 0.0);
}

TEST(ScoreElite, OutsiderOfBusyWindowsIsElite) {
  // Community {m1,m2} runs campaigns at s0 and s1. Outsider e posts in both
  // windows; c1..c4 each post once.
  std::vector<Review> rs;
  int id = 0;
  auto add = [&](const std::string& u, const std::string& s, double d) {
    rs.push_back(rv("r" + std::to_string(id++), u, s, fx::day(d), 5));
  };
  for (const char* m : {"m1", "m2"})
    for (int k = 0; k < 3; ++k) {
      add(m, "s0", k);
      add(m, "s1", 14 + k);
    }
  add("e", "s0", 1);
  add("e", "s0", 2);
  add("e", "s1", 15);
  add("c1", "s0", 3);
  add("c2", "s1", 16);
  add("c3", "s0", 4);
  add("c4", "s0", 60);
  auto ds = ReviewDataset::build(rs, fx::plain_stores(2));
  std::vector<std::uint32_t> raw(ds.user_count());
  for (UserIndex u = 0; u < ds.user_count(); ++u) raw[u] = ds.user_id(u)[0] == 'm' ? 0 : u + 1;
  auto part = Partition::from_assignment(raw);
  const CommunityId cm = part.assignment[*ds.find_user("m1")];
  auto ext = extract_campaigns(ds, part, std::vector<CommunityId>{cm});
  ASSERT_EQ(ext.campaigns.size(), 2u);
  auto out = score_elite(ds, part, ext.campaigns, std::vector<CommunityId>{cm});
  ASSERT_EQ(out.elite.size(), 1u);
  EXPECT_EQ(ds.user_id(out.elite[0].user), "e");
  EXPECT_EQ(out.candidates.size(), 4u);  // c4 never posts in a window
  for (const auto& a : out.annotations) {
    EXPECT_GE(a.score, 0.0);
    EXPECT_LT(a.score, 1.0);
    EXPECT_EQ(ds.review_user(a.review), out.elite[0].user);
  }
  for (const auto& e : out.elite) EXPECT_LT(part.communities[part.assignment[e.user]].size(), 2u);
}
