#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sybilwatch/alert.hpp"
#include "sybilwatch/campaign.hpp"
#include "sybilwatch/classifier.hpp"
#include "sybilwatch/elite.hpp"
#include "sybilwatch/synthgen.hpp"

namespace sybilwatch {

// Ground-truth comparisons for synthetic runs.

inline std::vector<std::uint8_t> user_flags(const ReviewDataset& ds, std::span<const std::string> ids) {
  std::vector<std::uint8_t> flags(ds.user_count(), 0);
  for (const auto& id : ids) {
    if (auto u = ds.find_user(id)) flags[*u] = 1;
  }
  return flags;
}

// A community is Sybil when planted Sybil accounts (regular or elite) make
// up more than half of its members.
inline std::map<CommunityId, Label> derive_labels(const ReviewDataset& ds, const Partition& partition,
                                                  const GroundTruth& gt) {
  auto sybil = user_flags(ds, gt.sybil_users);
  const auto elite = user_flags(ds, gt.elite_users);
  for (std::size_t u = 0; u < sybil.size(); ++u) sybil[u] |= elite[u];
  std::map<CommunityId, Label> labels;
  for (CommunityId c = 0; c < partition.size(); ++c) {
    const auto& members = partition.communities[c];
    if (members.size() < 2) continue;
    std::size_t bad = 0;
    for (UserIndex u : members) bad += sybil[u];
    labels[c] = 2 * bad > members.size() ? Label::kSybil : Label::kBenign;
  }
  return labels;
}

struct CampaignRecovery {
  std::size_t planted = 0;
  std::size_t recovered = 0;
  double rate = 0.0;
};

// A planted campaign is recovered when an extracted campaign on the same
// store, from a community holding at least one of the planted members,
// starts and ends within `tolerance` of the planted window.
inline CampaignRecovery campaign_recovery(const ReviewDataset& ds, const Partition& partition,
                                          std::span<const Campaign> extracted, const GroundTruth& gt,
                                          Duration tolerance = kSecondsPerWeek) {
  CampaignRecovery out;
  out.planted = gt.campaigns.size();
  for (const PlantedCampaign& pc : gt.campaigns) {
    auto store = ds.find_store(pc.store_id);
    if (!store) continue;
    std::set<CommunityId> owners;
    if (auto it = gt.communities.find(pc.community); it != gt.communities.end()) {
      for (const auto& id : it->second) {
        if (auto u = ds.find_user(id)) owners.insert(partition.assignment[*u]);
      }
    }
    for (const Campaign& c : extracted) {
      if (c.store != *store || !owners.contains(c.community)) continue;
      if (std::llabs(c.start_ts - pc.start_ts) <= tolerance && std::llabs(c.end_ts - pc.end_ts) <= tolerance) {
        ++out.recovered;
        break;
      }
    }
  }
  out.rate = out.planted == 0 ? 0.0 : static_cast<double>(out.recovered) / static_cast<double>(out.planted);
  return out;
}

// Share of planted elite users among the first k ranked users.
inline double precision_at_k(std::span<const EliteScore> ranking, const ReviewDataset& ds, const GroundTruth& gt,
                             std::size_t k) {
  if (k == 0) return 0.0;
  const auto elite = user_flags(ds, gt.elite_users);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) hits += elite[ranking[i].user];
  return static_cast<double>(hits) / static_cast<double>(k);
}

inline std::vector<CampaignPeriod> planted_periods(const ReviewDataset& ds, const GroundTruth& gt) {
  std::vector<CampaignPeriod> out;
  for (const auto& pc : gt.campaigns) {
    if (auto s = ds.find_store(pc.store_id)) out.push_back({*s, pc.start_ts, pc.end_ts});
  }
  return out;
}

inline constexpr std::array<double, 4> kPrefixFractions = {0.25, 1.0 / 3.0, 0.5, 1.0};

}  // namespace sybilwatch
