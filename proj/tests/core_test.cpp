#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sybilwatch/core.hpp"

using namespace sybilwatch;
using fx::rv;

TEST(Dataset, SingleReviewMakesOneBucket) {
  auto ds = ReviewDataset::build({rv("r1", "u1", "s0", fx::day(0), 5)}, fx::plain_stores(1));
  ASSERT_EQ(ds.user_count(), 1u);
  EXPECT_EQ(ds.user_reviews(0).size(), 1u);
  EXPECT_EQ(ds.store_reviews(0).size(), 1u);
}

TEST(Dataset, UserBucketSortedByTime) {
  auto ds = ReviewDataset::build({rv("r1", "u1", "s0", fx::day(5), 5), rv("r2", "u1", "s0", fx::day(1), 4)},
                                 fx::plain_stores(1));
  auto b = ds.user_reviews(0);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(ds.review(b[0]).review_id, "r2");
  EXPECT_EQ(ds.review(b[1]).review_id, "r1");
}

TEST(Dataset, EqualTimestampsKeepInputOrder) {
  auto ds = ReviewDataset::build({rv("rb", "u1", "s0", fx::day(1), 5), rv("ra", "u1", "s0", fx::day(1), 4)},
                                 fx::plain_stores(1));
  auto b = ds.user_reviews(0);
  EXPECT_EQ(ds.review(b[0]).review_id, "rb");
}

TEST(Dataset, UnknownStoreNamesReview) {
  try {
    ReviewDataset::build({rv("bad7", "u1", "nowhere", fx::day(0), 5)}, fx::plain_stores(1));
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad7"), std::string::npos);
  }
}

TEST(Dataset, DuplicateReviewIdNamed) {
  try {
    ReviewDataset::build({rv("r1", "u1", "s0", fx::day(0), 5), rv("r1", "u2", "s0", fx::day(0), 5)},
                         fx::plain_stores(1));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("r1"), std::string::npos);
  }
}

TEST(Dataset, RejectsBadStarsEmptyAndDuplicateStores) {
  EXPECT_THROW(ReviewDataset::build({rv("r1", "u1", "s0", fx::day(0), 0)}, fx::plain_stores(1)), ValidationError);
  EXPECT_THROW(ReviewDataset::build({rv("r1", "u1", "s0", fx::day(0), 6)}, fx::plain_stores(1)), ValidationError);
  EXPECT_THROW(ReviewDataset::build({}, fx::plain_stores(1)), ValidationError);
  auto stores = fx::plain_stores(1);
  stores.push_back(stores[0]);
  EXPECT_THROW(ReviewDataset::build({rv("r1", "u1", "s0", fx::day(0), 5)}, stores), ValidationError);
}

TEST(Dataset, UsersInternedInIdOrder) {
  auto ds = ReviewDataset::build({rv("r1", "zed", "s0", 10, 5), rv("r2", "amy", "s1", 20, 3), rv("r3", "kim", "s0", 5, 1)},
                                 fx::plain_stores(2));
  EXPECT_EQ(ds.user_id(0), "amy");
  EXPECT_EQ(ds.user_id(2), "zed");
  EXPECT_EQ(*ds.find_user("kim"), 1u);
  EXPECT_FALSE(ds.find_user("nobody"));
  EXPECT_EQ(ds.t_min(), 5);
  EXPECT_EQ(ds.t_max(), 20);
  EXPECT_EQ(ds.store_reviews(*ds.find_store("s0")).size(), 2u);
}

TEST(Time, DayOfFloorsNegativeTimestamps) {
  EXPECT_EQ(day_of(0), 0);
  EXPECT_EQ(day_of(86399), 0);
  EXPECT_EQ(day_of(86400), 1);
  EXPECT_EQ(day_of(-1), -1);
  EXPECT_EQ(day_start(-1), -86400);
}

TEST(Config, DefaultsValidate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.delta_t, 7 * kSecondsPerDay);
  EXPECT_EQ(c.alert_threshold, 7);
  EXPECT_DOUBLE_EQ(c.svm_c, 18.0);
  EXPECT_DOUBLE_EQ(c.svm_gamma, 0.09);
}

TEST(Config, RejectsOutOfRange) {
  PipelineConfig c;
  c.beta_thre = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.alert_window = kSecondsPerDay + 5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.cv_folds = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.delta_t = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}
