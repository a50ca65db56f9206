#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "sybilwatch/core.hpp"

namespace sybilwatch {

struct Alert {
  StoreIndex store = 0;
  Timestamp start_ts = 0;  // earliest watchlist review covered by the alert
  Timestamp end_ts = 0;    // latest watchlist review covered by the alert
  Timestamp fire_ts = 0;   // review at which the threshold was first reached
  std::size_t count = 0;   // watchlist reviews between start_ts and end_ts
  std::size_t trigger_days = 0;  // window start days that met the threshold
  std::vector<UserIndex> users;  // distinct watchlist users, ascending
};

// Slides a `window_days`-day window one day at a time over each store's
// watchlist reviews. Consecutive start days whose window holds at least
// `threshold` watchlist reviews coalesce into a single alert. Output is
// ordered by (store, start_ts).
inline std::vector<Alert> scan_alerts(const ReviewDataset& ds, std::span<const std::uint8_t> watchlist,
                                      int window_days = 7, int threshold = 7) {
  std::vector<Alert> alerts;
  struct Hit {
    std::int64_t day;
    Timestamp ts;
    UserIndex user;
  };
  for (StoreIndex s = 0; s < ds.store_count(); ++s) {
    std::vector<Hit> hits;
    for (ReviewIndex r : ds.store_reviews(s)) {
      const UserIndex u = ds.review_user(r);
      if (watchlist[u]) hits.push_back({day_of(ds.review(r).timestamp), ds.review(r).timestamp, u});
    }
    if (hits.size() < static_cast<std::size_t>(threshold)) continue;

    // A window starting on day d can only trigger if it contains a hit, so
    // d ranges over [hit_day - window_days + 1, hit_day].
    std::vector<std::int64_t> starts;
    for (const Hit& h : hits) {
      for (int k = 0; k < window_days; ++k) starts.push_back(h.day - k);
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    auto first_on_or_after = [&](std::int64_t day) {
      return static_cast<std::size_t>(
          std::lower_bound(hits.begin(), hits.end(), day, [](const Hit& h, std::int64_t d) { return h.day < d; }) -
          hits.begin());
    };

    bool open = false;
    std::int64_t prev_start = 0;
    std::size_t run_begin = 0, run_end = 0;  // hit index range covered by the run
    Alert current;
    auto close = [&] {
      current.store = s;
      current.start_ts = hits[run_begin].ts;
      current.end_ts = hits[run_end - 1].ts;
      current.count = run_end - run_begin;
      for (std::size_t i = run_begin; i < run_end; ++i) current.users.push_back(hits[i].user);
      std::sort(current.users.begin(), current.users.end());
      current.users.erase(std::unique(current.users.begin(), current.users.end()), current.users.end());
      alerts.push_back(std::move(current));
      current = Alert{};
      open = false;
    };
    for (std::int64_t d : starts) {
      const std::size_t lo = first_on_or_after(d);
      const std::size_t hi = first_on_or_after(d + window_days);
      const bool triggers = hi - lo >= static_cast<std::size_t>(threshold);
      if (open && (!triggers || d != prev_start + 1)) close();
      if (triggers) {
        if (!open) {
          open = true;
          run_begin = lo;
          current.fire_ts = hits[lo + static_cast<std::size_t>(threshold) - 1].ts;
        }
        run_end = hi;
        ++current.trigger_days;
        prev_start = d;
      }
    }
    if (open) close();
  }
  return alerts;
}

// Planted or extracted campaign period used to score early detection.
struct CampaignPeriod {
  StoreIndex store = 0;
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;
};

// Fraction of campaigns caught by an alert that had fired by the end of the
// first `prefix_fraction` of the campaign period and overlaps the campaign.
inline double early_detection_rate(std::span<const Alert> alerts, std::span<const CampaignPeriod> campaigns,
                                   double prefix_fraction) {
  if (campaigns.empty()) throw ValidationError("early detection rate needs at least one campaign");
  if (!(prefix_fraction > 0.0 && prefix_fraction <= 1.0))
    throw ValidationError("prefix fraction must lie in (0, 1]");
  std::size_t detected = 0;
  for (const CampaignPeriod& c : campaigns) {
    const Timestamp prefix_end =
        c.start_ts + static_cast<Timestamp>(prefix_fraction * static_cast<double>(c.end_ts - c.start_ts));
    for (const Alert& a : alerts) {
      if (a.store == c.store && a.fire_ts <= prefix_end && a.end_ts >= c.start_ts) {
        ++detected;
        break;
      }
    }
  }
  return static_cast<double>(detected) / static_cast<double>(campaigns.size());
}

}  // namespace sybilwatch
