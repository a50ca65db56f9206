#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sybilwatch/campaign.hpp"

namespace sybilwatch {

struct CampaignWindow {
  StoreIndex store = 0;
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;
  std::size_t count = 0;  // non-member reviews in the store during the window
  double weight = 0.0;    // count / max count over the community's windows
};

struct CommunityWindows {
  CommunityId community = 0;
  std::vector<CampaignWindow> windows;
  std::size_t max_count = 0;
};

// Normalizes each window's activity by the busiest window of the community.
// `counts` are the per-window non-member review counts, in campaign order.
inline std::vector<double> normalize_window_counts(std::span<const std::size_t> counts) {
  std::size_t max_count = 0;
  for (auto c : counts) max_count = std::max(max_count, c);
  std::vector<double> weights(counts.size(), 0.0);
  if (max_count == 0) return weights;
  for (std::size_t k = 0; k < counts.size(); ++k)
    weights[k] = static_cast<double>(counts[k]) / static_cast<double>(max_count);
  return weights;
}

template <typename Fn>
void for_each_window_review(const ReviewDataset& ds, const CampaignWindow& w, Fn&& fn) {
  auto rs = ds.store_reviews(w.store);
  auto it = std::lower_bound(rs.begin(), rs.end(), w.start_ts,
                             [&](ReviewIndex r, Timestamp t) { return ds.review(r).timestamp < t; });
  for (; it != rs.end() && ds.review(*it).timestamp <= w.end_ts; ++it) fn(*it);
}

// Window weights of one community from its campaigns. Returns nullopt when
// no window holds a non-member review.
inline std::optional<CommunityWindows> window_weights(CommunityId community, std::span<const Campaign> campaigns,
                                                      const ReviewDataset& ds,
                                                      std::span<const CommunityId> assignment) {
  CommunityWindows cw;
  cw.community = community;
  std::vector<std::size_t> counts;
  for (const Campaign& c : campaigns) {
    if (c.community != community) continue;
    CampaignWindow w{c.store, c.start_ts, c.end_ts, 0, 0.0};
    for_each_window_review(ds, w, [&](ReviewIndex r) {
      if (assignment[ds.review_user(r)] != community) ++w.count;
    });
    counts.push_back(w.count);
    cw.windows.push_back(w);
  }
  const auto weights = normalize_window_counts(counts);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    cw.windows[k].weight = weights[k];
    cw.max_count = std::max(cw.max_count, counts[k]);
  }
  if (cw.max_count == 0) return std::nullopt;
  return cw;
}

// Window-weighted review count of user u in a community's campaigns.
inline double weighted_count(UserIndex u, const CommunityWindows& cw, const ReviewDataset& ds) {
  double n = 0.0;
  for (ReviewIndex r : ds.user_reviews(u)) {
    const Review& rev = ds.review(r);
    for (const CampaignWindow& w : cw.windows) {
      if (ds.review_store(r) == w.store && rev.timestamp >= w.start_ts && rev.timestamp <= w.end_ts)
        n += w.weight;
    }
  }
  return n;
}

inline double participation_rate(double n, double mu, double sigma, double sigma_floor = 1e-9) {
  const double s = std::max(sigma, sigma_floor);
  return 1.0 / (1.0 + std::exp(-(n - mu) / s));
}

struct PopulationStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

inline PopulationStats population_stats(std::span<const double> values) {
  PopulationStats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(values.size()));
  return s;
}

struct CommunityParticipation {
  CommunityId community = 0;
  double weighted_count = 0.0;
  double rho = 0.0;
};

struct EliteScore {
  UserIndex user = 0;
  std::vector<CommunityParticipation> communities;  // ascending community id
  double sybilness = 0.0;
  bool in_community = false;
  bool is_elite = false;

  double max_rho() const {
    double m = 0.0;
    for (const auto& c : communities) m = std::max(m, c.rho);
    return m;
  }
};

// Sum over communities of rho * weighted count. Not bounded by 1.
inline double sybilness(std::span<const CommunityParticipation> parts) {
  double f = 0.0;
  for (const auto& p : parts) f += p.rho * p.weighted_count;
  return f;
}

// Elite users sit in no detected community and exceed the rho cutoff for
// some community. Ranked by sybilness descending, then user id.
inline std::vector<EliteScore> classify_elite(std::span<const EliteScore> candidates, const ReviewDataset& ds,
                                              double rho_cutoff) {
  std::vector<EliteScore> elite;
  for (const EliteScore& s : candidates) {
    if (s.in_community) continue;
    if (s.max_rho() > rho_cutoff) {
      elite.push_back(s);
      elite.back().is_elite = true;
    }
  }
  std::sort(elite.begin(), elite.end(), [&](const EliteScore& a, const EliteScore& b) {
    if (a.sybilness != b.sybilness) return a.sybilness > b.sybilness;
    return ds.user_id(a.user) < ds.user_id(b.user);
  });
  return elite;
}

struct ReviewAnnotation {
  ReviewIndex review = 0;
  double score = 0.0;
};

struct EliteScoring {
  std::vector<CommunityWindows> windows;
  std::vector<PopulationStats> stats;  // parallel to windows
  std::vector<CommunityId> skipped_communities;
  std::vector<EliteScore> candidates;  // ascending user index
  std::vector<EliteScore> elite;       // ranked
  std::vector<ReviewAnnotation> annotations;
};

// Highest rho(u, C) * P_C(k) over every window k containing the review;
// 0 when the review is in no window.
inline double annotate_review(ReviewIndex r, const ReviewDataset& ds, std::span<const CommunityWindows> windows,
                              const EliteScore& score) {
  const Review& rev = ds.review(r);
  double best = 0.0;
  for (const auto& cw : windows) {
    auto it = std::find_if(score.communities.begin(), score.communities.end(),
                           [&](const CommunityParticipation& p) { return p.community == cw.community; });
    if (it == score.communities.end()) continue;
    for (const CampaignWindow& w : cw.windows) {
      if (ds.review_store(r) == w.store && rev.timestamp >= w.start_ts && rev.timestamp <= w.end_ts)
        best = std::max(best, it->rho * w.weight);
    }
  }
  return best;
}

struct EliteOptions {
  double rho_cutoff = 0.5;
  double sigma_floor = 1e-9;
  RhoPopulation population = RhoPopulation::kCandidates;
};

// Scores every user outside each Sybil community against that community's
// campaign windows, then ranks the elite.
inline EliteScoring score_elite(const ReviewDataset& ds, const Partition& partition,
                                std::span<const Campaign> campaigns, std::span<const CommunityId> sybil_communities,
                                const EliteOptions& opt = {}) {
  EliteScoring out;
  std::vector<CommunityId> order(sybil_communities.begin(), sybil_communities.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  std::map<UserIndex, EliteScore> by_user;
  for (CommunityId c : order) {
    auto cw = window_weights(c, campaigns, ds, partition.assignment);
    if (!cw) {
      out.skipped_communities.push_back(c);
      continue;
    }
    std::map<UserIndex, double> outsiders;
    std::map<UserIndex, double> members;
    for (const CampaignWindow& w : cw->windows) {
      for_each_window_review(ds, w, [&](ReviewIndex r) {
        const UserIndex u = ds.review_user(r);
        (partition.assignment[u] == c ? members : outsiders)[u] += w.weight;
      });
    }
    std::vector<double> population;
    if (opt.population == RhoPopulation::kCandidates) {
      for (const auto& [u, n] : outsiders) population.push_back(n);
    } else {
      for (UserIndex u : partition.communities[c]) {
        auto it = members.find(u);
        population.push_back(it == members.end() ? 0.0 : it->second);
      }
    }
    const PopulationStats stats = population_stats(population);
    for (const auto& [u, n] : outsiders) {
      EliteScore& s = by_user[u];
      s.user = u;
      s.communities.push_back({c, n, participation_rate(n, stats.mean, stats.stddev, opt.sigma_floor)});
    }
    out.windows.push_back(std::move(*cw));
    out.stats.push_back(stats);
  }

  for (auto& [u, s] : by_user) {
    s.sybilness = sybilness(s.communities);
    s.in_community = partition.communities[partition.assignment[u]].size() >= 2;
    out.candidates.push_back(s);
  }
  out.elite = classify_elite(out.candidates, ds, opt.rho_cutoff);
  for (const EliteScore& e : out.elite) {
    for (ReviewIndex r : ds.user_reviews(e.user)) {
      const double score = annotate_review(r, ds, out.windows, e);
      if (score > 0.0) out.annotations.push_back({r, score});
    }
  }
  std::sort(out.annotations.begin(), out.annotations.end(), [&](const auto& a, const auto& b) {
    return ds.review(a.review).review_id < ds.review(b.review).review_id;
  });
  return out;
}

}  // namespace sybilwatch
