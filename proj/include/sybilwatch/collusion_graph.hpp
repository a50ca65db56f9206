#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "sybilwatch/core.hpp"
#include "sybilwatch/parallel.hpp"

namespace sybilwatch {

// Two reviews collude when they hit the same store within delta_t of each
// other and are both 1-star or both 5-star. Stars 2..4 never collude.
inline bool collusive(const Review& a, const Review& b, Duration delta_t) {
  if (a.store_id != b.store_id) return false;
  if (a.star != b.star || (a.star != 1 && a.star != 5)) return false;
  Duration gap = a.timestamp > b.timestamp ? a.timestamp - b.timestamp : b.timestamp - a.timestamp;
  return gap <= delta_t;
}

struct MatchFlags {
  std::vector<std::uint8_t> first;   // P_u, one entry per review of u
  std::vector<std::uint8_t> second;  // P_v, one entry per review of v
};

namespace detail {

inline std::vector<std::uint8_t> flags_against(std::span<const Review> lhs, std::span<const Review> rhs,
                                               Duration delta_t) {
  std::vector<std::uint8_t> flags(lhs.size(), 0);
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    const Timestamp lo = lhs[k].timestamp - delta_t;
    auto it = std::lower_bound(rhs.begin(), rhs.end(), lo,
                               [](const Review& r, Timestamp t) { return r.timestamp < t; });
    for (; it != rhs.end() && it->timestamp <= lhs[k].timestamp + delta_t; ++it) {
      if (collusive(lhs[k], *it, delta_t)) {
        flags[k] = 1;
        break;
      }
    }
  }
  return flags;
}

}  // namespace detail

// Both lists must be sorted by timestamp. A single review of v may witness
// several flags of u (existential reading).
inline MatchFlags match_flags(std::span<const Review> ru, std::span<const Review> rv, Duration delta_t) {
  return {detail::flags_against(ru, rv, delta_t), detail::flags_against(rv, ru, delta_t)};
}

// Matched reviews of both users over the combined review count.
inline double similarity(std::span<const Review> ru, std::span<const Review> rv, Duration delta_t) {
  if (ru.empty() && rv.empty()) return 0.0;
  MatchFlags f = match_flags(ru, rv, delta_t);
  std::size_t matched = 0;
  for (auto b : f.first) matched += b;
  for (auto b : f.second) matched += b;
  return static_cast<double>(matched) / static_cast<double>(ru.size() + rv.size());
}

// Materialized review list of one user, sorted by timestamp.
inline std::vector<Review> reviews_of(const ReviewDataset& ds, UserIndex u) {
  std::vector<Review> out;
  for (ReviewIndex r : ds.user_reviews(u)) out.push_back(ds.review(r));
  return out;
}

struct Edge {
  UserIndex u = 0;  // u < v
  UserIndex v = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  UserIndex node = 0;
  double weight = 0.0;
};

// Undirected weighted user graph. Nodes are dataset user indices; isolated
// users are kept as nodes without neighbors.
class CollusionGraph {
 public:
  CollusionGraph() = default;

  CollusionGraph(std::size_t node_count, std::vector<Edge> edges) : node_count_(node_count) {
    for (Edge& e : edges) {
      if (e.u == e.v) throw ValidationError("self-edge on node " + std::to_string(e.u));
      if (e.u >= node_count || e.v >= node_count) throw ValidationError("edge endpoint out of range");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v)
        throw ValidationError("duplicate edge " + std::to_string(edges[i].u) + "-" +
                              std::to_string(edges[i].v));
    }
    edges_ = std::move(edges);

    offsets_.assign(node_count_ + 1, 0);
    for (const Edge& e : edges_) {
      ++offsets_[e.u + 1];
      ++offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < node_count_; ++i) offsets_[i + 1] += offsets_[i];
    adjacency_.resize(offsets_.back());
    degree_.assign(node_count_, 0.0);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
      adjacency_[cursor[e.u]++] = {e.v, e.weight};
      adjacency_[cursor[e.v]++] = {e.u, e.weight};
      degree_[e.u] += e.weight;
      degree_[e.v] += e.weight;
      total_weight_ += e.weight;
    }
    for (std::size_t n = 0; n < node_count_; ++n) {
      std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[n]),
                adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[n + 1]),
                [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }
  }

  std::size_t node_count() const { return node_count_; }
  std::span<const Edge> edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  std::span<const Neighbor> neighbors(UserIndex n) const {
    return std::span(adjacency_).subspan(offsets_[n], offsets_[n + 1] - offsets_[n]);
  }
  double degree(UserIndex n) const { return degree_[n]; }
  double total_weight() const { return total_weight_; }

  std::optional<double> weight(UserIndex a, UserIndex b) const {
    auto nb = neighbors(a);
    auto it = std::lower_bound(nb.begin(), nb.end(), b,
                               [](const Neighbor& x, UserIndex key) { return x.node < key; });
    if (it == nb.end() || it->node != b) return std::nullopt;
    return it->weight;
  }

 private:
  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<double> degree_;
  double total_weight_ = 0.0;
};

namespace detail {

struct StarEntry {
  Timestamp ts;
  UserIndex user;
  ReviewIndex review;
};

// Per store, the 1-star and 5-star reviews ordered by time: the only reviews
// that can ever collude.
struct StoreStarIndex {
  std::vector<std::vector<StarEntry>> one_star;
  std::vector<std::vector<StarEntry>> five_star;

  explicit StoreStarIndex(const ReviewDataset& ds)
      : one_star(ds.store_count()), five_star(ds.store_count()) {
    for (StoreIndex s = 0; s < ds.store_count(); ++s) {
      for (ReviewIndex r : ds.store_reviews(s)) {
        const Review& rev = ds.review(r);
        if (rev.star == 1) one_star[s].push_back({rev.timestamp, ds.review_user(r), r});
        if (rev.star == 5) five_star[s].push_back({rev.timestamp, ds.review_user(r), r});
      }
    }
  }

  const std::vector<StarEntry>& bucket(StoreIndex s, int star) const {
    return star == 1 ? one_star[s] : five_star[s];
  }
};

struct PairMatch {
  UserIndex other;
  ReviewIndex mine;
  ReviewIndex theirs;
};

}  // namespace detail

// Builds the Sybil-social-link graph. Candidate partners of u are found by
// scanning, for each of u's 1/5-star reviews, the same-star reviews of that
// store inside [t - delta_t, t + delta_t]; users sharing no such window have
// similarity 0, so the result equals exhaustive all-pairs evaluation.
inline CollusionGraph build_graph(const ReviewDataset& ds, Duration delta_t, double beta_thre,
                                  unsigned workers = 0) {
  const detail::StoreStarIndex index(ds);
  const std::size_t users = ds.user_count();
  std::vector<std::vector<Edge>> per_user(users);

  parallel_for(users, workers, [&](std::size_t ui) {
    const auto u = static_cast<UserIndex>(ui);
    std::vector<detail::PairMatch> matches;
    for (ReviewIndex r : ds.user_reviews(u)) {
      const Review& rev = ds.review(r);
      if (rev.star != 1 && rev.star != 5) continue;
      const auto& bucket = index.bucket(ds.review_store(r), rev.star);
      auto it = std::lower_bound(bucket.begin(), bucket.end(), rev.timestamp - delta_t,
                                 [](const detail::StarEntry& e, Timestamp t) { return e.ts < t; });
      for (; it != bucket.end() && it->ts <= rev.timestamp + delta_t; ++it) {
        if (it->user > u) matches.push_back({it->user, r, it->review});
      }
    }
    if (matches.empty()) return;
    std::sort(matches.begin(), matches.end(), [](const auto& a, const auto& b) {
      if (a.other != b.other) return a.other < b.other;
      if (a.mine != b.mine) return a.mine < b.mine;
      return a.theirs < b.theirs;
    });
    std::vector<ReviewIndex> theirs;
    auto& out = per_user[ui];
    for (std::size_t i = 0; i < matches.size();) {
      std::size_t j = i;
      std::size_t distinct_mine = 0;
      theirs.clear();
      while (j < matches.size() && matches[j].other == matches[i].other) {
        if (j == i || matches[j].mine != matches[j - 1].mine) ++distinct_mine;
        theirs.push_back(matches[j].theirs);
        ++j;
      }
      std::sort(theirs.begin(), theirs.end());
      auto distinct_theirs =
          static_cast<std::size_t>(std::unique(theirs.begin(), theirs.end()) - theirs.begin());
      const UserIndex v = matches[i].other;
      const double sim = static_cast<double>(distinct_mine + distinct_theirs) /
                         static_cast<double>(ds.user_reviews(u).size() + ds.user_reviews(v).size());
      if (sim > beta_thre) out.push_back({u, v, sim});
      i = j;
    }
  }, 256);

  std::size_t total = 0;
  for (const auto& e : per_user) total += e.size();
  std::vector<Edge> edges;
  edges.reserve(total);
  for (auto& e : per_user) edges.insert(edges.end(), e.begin(), e.end());
  return CollusionGraph(users, std::move(edges));
}

}  // namespace sybilwatch
