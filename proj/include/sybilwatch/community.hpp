#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "sybilwatch/collusion_graph.hpp"

namespace sybilwatch {

// user -> community and community -> members, kept consistent. Community ids
// are ordered by each community's smallest member.
struct Partition {
  std::vector<CommunityId> assignment;
  std::vector<std::vector<UserIndex>> communities;

  static Partition from_assignment(std::span<const std::uint32_t> raw) {
    Partition p;
    p.assignment.resize(raw.size());
    std::vector<std::uint32_t> relabel;
    std::vector<std::uint8_t> seen;
    std::uint32_t max_label = 0;
    for (auto c : raw) max_label = std::max(max_label, c);
    relabel.assign(raw.empty() ? 0 : max_label + 1, 0);
    seen.assign(relabel.size(), 0);
    for (std::size_t n = 0; n < raw.size(); ++n) {
      if (!seen[raw[n]]) {
        seen[raw[n]] = 1;
        relabel[raw[n]] = static_cast<std::uint32_t>(p.communities.size());
        p.communities.emplace_back();
      }
      const CommunityId c = relabel[raw[n]];
      p.assignment[n] = c;
      p.communities[c].push_back(static_cast<UserIndex>(n));
    }
    return p;
  }

  std::size_t size() const { return communities.size(); }
};

// Weighted Newman modularity at resolution 1. An edgeless graph scores 0.
inline double modularity(const CollusionGraph& g, std::span<const CommunityId> assignment) {
  const double w = g.total_weight();
  if (w <= 0.0) return 0.0;
  std::size_t groups = 0;
  for (auto c : assignment) groups = std::max<std::size_t>(groups, c + 1);
  std::vector<double> internal(groups, 0.0), total(groups, 0.0);
  for (const Edge& e : g.edges()) {
    if (assignment[e.u] == assignment[e.v]) internal[assignment[e.u]] += 2.0 * e.weight;
  }
  for (UserIndex n = 0; n < g.node_count(); ++n) total[assignment[n]] += g.degree(n);
  double q = 0.0;
  const double two_w = 2.0 * w;
  for (std::size_t c = 0; c < groups; ++c) {
    q += internal[c] / two_w - (total[c] / two_w) * (total[c] / two_w);
  }
  return q;
}

struct LouvainResult {
  Partition partition;
  // Modularity after every local-move pass, across all levels.
  std::vector<double> modularity_trace;
  int levels = 0;
};

namespace detail {

struct LevelGraph {
  std::vector<std::vector<Neighbor>> adjacency;  // no self loops
  std::vector<double> self_weight;               // intra-node weight, each edge once
  std::vector<double> degree;
  double two_w = 0.0;

  std::size_t size() const { return degree.size(); }

  double modularity(std::span<const std::uint32_t> comm) const {
    if (two_w <= 0.0) return 0.0;
    std::vector<double> internal(size(), 0.0), total(size(), 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      internal[comm[i]] += 2.0 * self_weight[i];
      total[comm[i]] += degree[i];
      for (const Neighbor& nb : adjacency[i]) {
        if (comm[nb.node] == comm[i]) internal[comm[i]] += nb.weight;
      }
    }
    double q = 0.0;
    for (std::size_t c = 0; c < size(); ++c) {
      q += internal[c] / two_w - (total[c] / two_w) * (total[c] / two_w);
    }
    return q;
  }
};

inline LevelGraph level_from(const CollusionGraph& g) {
  LevelGraph lg;
  lg.adjacency.resize(g.node_count());
  lg.self_weight.assign(g.node_count(), 0.0);
  lg.degree.resize(g.node_count());
  for (UserIndex n = 0; n < g.node_count(); ++n) {
    auto nb = g.neighbors(n);
    lg.adjacency[n].assign(nb.begin(), nb.end());
    lg.degree[n] = g.degree(n);
  }
  lg.two_w = 2.0 * g.total_weight();
  return lg;
}

// Collapses communities into nodes; `comm` must be dense in [0, count).
inline LevelGraph aggregate(const LevelGraph& lg, std::span<const std::uint32_t> comm, std::size_t count) {
  LevelGraph out;
  out.adjacency.resize(count);
  out.self_weight.assign(count, 0.0);
  out.degree.assign(count, 0.0);
  out.two_w = lg.two_w;
  std::vector<std::vector<Neighbor>> raw(count);
  for (std::size_t i = 0; i < lg.size(); ++i) {
    const auto c = comm[i];
    out.degree[c] += lg.degree[i];
    out.self_weight[c] += lg.self_weight[i];
    for (const Neighbor& nb : lg.adjacency[i]) {
      const auto d = comm[nb.node];
      if (d == c) {
        out.self_weight[c] += nb.weight / 2.0;
      } else {
        raw[c].push_back({d, nb.weight});
      }
    }
  }
  for (std::size_t c = 0; c < count; ++c) {
    auto& r = raw[c];
    std::sort(r.begin(), r.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    for (const Neighbor& nb : r) {
      if (!out.adjacency[c].empty() && out.adjacency[c].back().node == nb.node) {
        out.adjacency[c].back().weight += nb.weight;
      } else {
        out.adjacency[c].push_back(nb);
      }
    }
  }
  return out;
}

}  // namespace detail

// Louvain modularity optimisation: seeded-order local moves alternate with
// graph aggregation until a level produces no move. Among equally good
// target communities the lowest id wins; a node only leaves its community
// for a strictly better one.
inline LouvainResult louvain(const CollusionGraph& g, std::uint64_t seed) {
  constexpr double kTieEps = 1e-12;
  constexpr double kConvergence = 1e-9;

  LouvainResult result;
  std::mt19937_64 rng(seed);
  detail::LevelGraph level = detail::level_from(g);
  std::vector<std::uint32_t> node_comm(g.node_count());
  for (std::size_t n = 0; n < node_comm.size(); ++n) node_comm[n] = static_cast<std::uint32_t>(n);

  if (level.two_w <= 0.0) {
    result.partition = Partition::from_assignment(node_comm);
    return result;
  }

  double current_q = level.modularity(node_comm);
  result.modularity_trace.push_back(current_q);

  for (;;) {
    const std::size_t n = level.size();
    std::vector<std::uint32_t> comm(n);
    std::vector<double> tot(n);
    for (std::size_t i = 0; i < n; ++i) {
      comm[i] = static_cast<std::uint32_t>(i);
      tot[i] = level.degree[i];
    }
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    std::vector<double> link(n, 0.0);
    std::vector<std::uint32_t> touched;
    bool any_move = false;
    for (;;) {
      bool moved = false;
      for (std::uint32_t i : order) {
        const double k_i = level.degree[i];
        const std::uint32_t own = comm[i];
        touched.clear();
        for (const Neighbor& nb : level.adjacency[i]) {
          const auto c = comm[nb.node];
          if (link[c] == 0.0) touched.push_back(c);
          link[c] += nb.weight;
        }
        tot[own] -= k_i;
        const double own_gain = link[own] - tot[own] * k_i / level.two_w;
        std::uint32_t best = own;
        double best_gain = -std::numeric_limits<double>::infinity();
        std::sort(touched.begin(), touched.end());
        for (auto c : touched) {
          if (c == own) continue;
          const double gain = link[c] - tot[c] * k_i / level.two_w;
          if (gain > best_gain + kTieEps) {
            best_gain = gain;
            best = c;
          }
        }
        if (best == own || !(best_gain > own_gain + kTieEps)) best = own;
        tot[best] += k_i;
        if (best != own) {
          comm[i] = best;
          moved = true;
        }
        for (auto c : touched) link[c] = 0.0;
      }
      if (!moved) break;
      any_move = true;
      const double q = level.modularity(comm);
      result.modularity_trace.push_back(q);
      const double gain = q - current_q;
      current_q = q;
      if (gain < kConvergence) break;
    }
    if (!any_move) break;

    std::vector<std::uint32_t> dense(n, std::numeric_limits<std::uint32_t>::max());
    std::uint32_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (dense[comm[i]] == std::numeric_limits<std::uint32_t>::max()) dense[comm[i]] = count++;
      comm[i] = dense[comm[i]];
    }
    for (auto& c : node_comm) c = comm[c];
    ++result.levels;
    if (count == n) break;
    level = detail::aggregate(level, comm, count);
    std::vector<std::uint32_t> identity(count);
    for (std::uint32_t c = 0; c < count; ++c) identity[c] = c;
    result.modularity_trace.push_back(level.modularity(identity));
  }

  result.partition = Partition::from_assignment(node_comm);
  return result;
}

}  // namespace sybilwatch
