#pragma once

// Brute-force reference computations shared by the acceptance suite. None of
// these call into the library's own algorithms.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sybilwatch/collusion_graph.hpp"

namespace oracle {

using namespace sybilwatch;

// Similarity of every user pair with at least one matched review, keyed by
// user ids, from the three collusion predicates on every review pair.
inline std::map<std::pair<std::string, std::string>, double> all_pairs_similarity(const std::vector<Review>& reviews,
                                                                                  Duration dt) {
  std::map<std::string, std::vector<Review>> by_user;
  for (const auto& r : reviews) by_user[r.user_id].push_back(r);
  auto match = [&](const Review& x, const Review& y) {
    return x.store_id == y.store_id && std::llabs(x.timestamp - y.timestamp) <= dt &&
           ((x.star == 5 && y.star == 5) || (x.star == 1 && y.star == 1));
  };
  std::map<std::pair<std::string, std::string>, double> sims;
  for (auto a = by_user.begin(); a != by_user.end(); ++a) {
    for (auto b = std::next(a); b != by_user.end(); ++b) {
      int matched = 0;
      for (const auto& x : a->second) {
        bool hit = false;
        for (const auto& y : b->second) hit = hit || match(x, y);
        matched += hit;
      }
      for (const auto& y : b->second) {
        bool hit = false;
        for (const auto& x : a->second) hit = hit || match(x, y);
        matched += hit;
      }
      if (matched > 0)
        sims[{a->first, b->first}] =
            static_cast<double>(matched) / static_cast<double>(a->second.size() + b->second.size());
    }
  }
  return sims;
}

// Newman modularity straight from the double sum over an adjacency matrix.
inline double modularity(std::size_t n, const std::vector<Edge>& edges, const std::vector<std::uint32_t>& comm) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  double w = 0;
  for (const Edge& e : edges) {
    a[e.u][e.v] += e.weight;
    a[e.v][e.u] += e.weight;
    w += e.weight;
  }
  if (w == 0) return 0;
  std::vector<double> k(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
  double q = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (comm[i] == comm[j]) q += a[i][j] - k[i] * k[j] / (2 * w);
  return q / (2 * w);
}

// Best modularity over every set partition, enumerated as restricted growth
// strings.
inline double best_modularity(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::uint32_t> rgs(n, 0);
  double best = -1;
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t top) {
    if (i == n) {
      best = std::max(best, modularity(n, edges, rgs));
      return;
    }
    for (std::uint32_t c = 0; c <= top + 1; ++c) {
      rgs[i] = c;
      rec(i + 1, std::max(top, c));
    }
  };
  rec(1, 0);
  return best;
}

inline std::vector<Edge> random_connected(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> w(0.2, 1.0), coin(0, 1);
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  std::vector<Edge> edges;
  for (std::uint32_t v = 1; v < n; ++v) {
    auto p = static_cast<std::uint32_t>(rng() % v);
    edges.push_back({p, v, w(rng)});
    has[p][v] = true;
  }
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (!has[i][j] && coin(rng) < 0.3) edges.push_back({i, j, w(rng)});
  return edges;
}

// log2(N) - (1/N) sum c log2 c.
inline double entropy(const std::map<std::string, int>& counts) {
  double n = 0, s = 0;
  for (auto& [k, c] : counts) n += c;
  for (auto& [k, c] : counts) s += c * std::log2(static_cast<double>(c));
  return std::log2(n) - s / n;
}

// 3 * triangles / connected triples over an adjacency matrix.
inline double clustering(const CollusionGraph& g, const std::vector<UserIndex>& m) {
  const std::size_t n = m.size();
  auto adj = [&](std::size_t i, std::size_t j) { return g.weight(m[i], m[j]).has_value(); };
  double tri = 0, triples = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) tri += adj(i, j) && adj(j, k) && adj(i, k);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (a != c && b != c) triples += adj(c, a) && adj(c, b);
  return triples == 0 ? 0.0 : 3 * tri / triples;
}

}  // namespace oracle
