#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sybilwatch/community.hpp"

namespace sybilwatch {

struct WeeklySeries {
  Timestamp origin = 0;             // 00:00 UTC of the earliest review's day
  std::vector<std::size_t> counts;  // counts.front() and counts.back() are nonzero
};

// Bins the reviews posted by `members` in `store` into consecutive windows of
// `week_len` seconds. Returns nullopt when the members never reviewed it.
inline std::optional<WeeklySeries> weekly_bins(const ReviewDataset& ds, std::span<const UserIndex> members,
                                               StoreIndex store, Duration week_len = kSecondsPerWeek) {
  std::vector<Timestamp> times;
  for (UserIndex u : members) {
    for (ReviewIndex r : ds.user_reviews(u)) {
      if (ds.review_store(r) == store) times.push_back(ds.review(r).timestamp);
    }
  }
  if (times.empty()) return std::nullopt;
  std::sort(times.begin(), times.end());
  WeeklySeries series;
  series.origin = day_start(times.front());
  series.counts.assign(static_cast<std::size_t>((times.back() - series.origin) / week_len) + 1, 0);
  for (Timestamp t : times) ++series.counts[static_cast<std::size_t>((t - series.origin) / week_len)];
  return series;
}

enum class Side { kLeft, kRight };

struct WeekInterval {
  std::size_t first = 0;  // inclusive
  std::size_t last = 0;   // inclusive

  friend bool operator==(const WeekInterval&, const WeekInterval&) = default;
};

// An interval is sparse when its empty weeks strictly outnumber its active
// weeks. For kLeft the candidates are [lo, x] with x <= hi; for kRight,
// [x, hi] with x >= lo. kLongest picks the longest candidate, kShortest the
// shortest.
inline std::optional<WeekInterval> find_sparse_interval(std::span<const std::size_t> counts, Side side,
                                                        std::size_t lo, std::size_t hi,
                                                        SparseRule rule = SparseRule::kShortest) {
  if (lo > hi || hi >= counts.size()) return std::nullopt;
  std::optional<WeekInterval> best;
  long balance = 0;  // empty weeks minus active weeks
  if (side == Side::kLeft) {
    for (std::size_t x = lo; x <= hi; ++x) {
      balance += counts[x] == 0 ? 1 : -1;
      if (balance > 0) {
        best = WeekInterval{lo, x};
        if (rule == SparseRule::kShortest) break;
      }
    }
  } else {
    for (std::size_t x = hi + 1; x-- > lo;) {
      balance += counts[x] == 0 ? 1 : -1;
      if (balance > 0) {
        best = WeekInterval{x, hi};
        if (rule == SparseRule::kShortest) break;
      }
    }
  }
  return best;
}

inline std::size_t interval_reviews(std::span<const std::size_t> counts, WeekInterval iv) {
  std::size_t sum = 0;
  for (std::size_t i = iv.first; i <= iv.last; ++i) sum += counts[i];
  return sum;
}

// Repeatedly strips the sparse prefix or suffix that holds fewer reviews
// (the prefix on ties) until neither side has one. Searches exclude the
// opposite end week, so a window is never emptied: both ends of the
// window always hold reviews.
inline WeekInterval detect_window(std::span<const std::size_t> counts, SparseRule rule = SparseRule::kShortest) {
  if (counts.empty()) throw ValidationError("detect_window needs a non-empty series");
  std::size_t l = 0;
  std::size_t r = counts.size() - 1;
  while (l < r) {
    auto left = find_sparse_interval(counts, Side::kLeft, l, r - 1, rule);
    auto right = find_sparse_interval(counts, Side::kRight, l + 1, r, rule);
    if (!left && !right) break;
    if (left && (!right || interval_reviews(counts, *left) <= interval_reviews(counts, *right))) {
      l = left->last + 1;
    } else {
      r = right->first - 1;
    }
  }
  return {l, r};
}

struct Campaign {
  CommunityId community = 0;
  StoreIndex store = 0;
  std::size_t start_week = 0;
  std::size_t end_week = 0;
  Timestamp start_ts = 0;  // first second of start_week
  Timestamp end_ts = 0;    // last second of end_week
  std::size_t review_count = 0;
};

struct CampaignExtraction {
  std::vector<Campaign> campaigns;
  std::size_t skipped_pairs = 0;  // (community, store) pairs below the review minimum
};

// One campaign per (Sybil community, store) pair with at least
// `min_reviews` member reviews, ordered by (community, store).
inline CampaignExtraction extract_campaigns(const ReviewDataset& ds, const Partition& partition,
                                            std::span<const CommunityId> sybil_communities,
                                            Duration week_len = kSecondsPerWeek, int min_reviews = 3,
                                            SparseRule rule = SparseRule::kShortest) {
  std::vector<CommunityId> order(sybil_communities.begin(), sybil_communities.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  CampaignExtraction out;
  for (CommunityId c : order) {
    const auto& members = partition.communities.at(c);
    std::map<StoreIndex, std::size_t> per_store;
    for (UserIndex u : members) {
      for (ReviewIndex r : ds.user_reviews(u)) ++per_store[ds.review_store(r)];
    }
    for (const auto& [store, count] : per_store) {
      if (count < static_cast<std::size_t>(min_reviews)) {
        ++out.skipped_pairs;
        continue;
      }
      auto series = weekly_bins(ds, members, store, week_len);
      const WeekInterval w = detect_window(series->counts, rule);
      Campaign camp;
      camp.community = c;
      camp.store = store;
      camp.start_week = w.first;
      camp.end_week = w.last;
      camp.start_ts = series->origin + static_cast<Timestamp>(w.first) * week_len;
      camp.end_ts = series->origin + static_cast<Timestamp>(w.last + 1) * week_len - 1;
      camp.review_count = interval_reviews(series->counts, w);
      out.campaigns.push_back(camp);
    }
  }
  return out;
}

}  // namespace sybilwatch
