#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sybilwatch/collusion_graph.hpp"

namespace sybilwatch {

inline constexpr std::size_t kFeatureCount = 8;

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "score_deviation",   "avg_reviews_per_store",   "entropy_chain",        "entropy_district",
    "avg_similarity",    "global_clustering_coeff", "unique_reviews_ratio", "max_duplication"};

struct FeatureVector {
  double score_deviation = 0.0;
  double avg_reviews_per_store = 0.0;
  double entropy_chain = 0.0;     // bits
  double entropy_district = 0.0;  // bits
  double avg_similarity = 0.0;
  double global_clustering_coeff = 0.0;
  double unique_reviews_ratio = 0.0;
  int max_duplication = 0;

  std::array<double, kFeatureCount> values() const {
    return {score_deviation,         avg_reviews_per_store, entropy_chain,
            entropy_district,        avg_similarity,        global_clustering_coeff,
            unique_reviews_ratio,    static_cast<double>(max_duplication)};
  }

  static FeatureVector from_values(std::span<const double> v) {
    if (v.size() != kFeatureCount) throw ValidationError("feature vector needs 8 values");
    FeatureVector f;
    f.score_deviation = v[0];
    f.avg_reviews_per_store = v[1];
    f.entropy_chain = v[2];
    f.entropy_district = v[3];
    f.avg_similarity = v[4];
    f.global_clustering_coeff = v[5];
    f.unique_reviews_ratio = v[6];
    f.max_duplication = static_cast<int>(std::lround(v[7]));
    return f;
  }

  bool finite() const {
    for (double x : values()) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }
};

// Shannon entropy in bits of a count histogram; zero counts are skipped.
template <typename Counts>
double entropy_bits(const Counts& counts) {
  double total = 0.0;
  for (const auto& c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (const auto& c : counts) {
    if (c <= 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

// Dataset-wide mean star of every store.
inline std::vector<double> store_mean_stars(const ReviewDataset& ds) {
  std::vector<double> mean(ds.store_count(), 0.0);
  for (StoreIndex s = 0; s < ds.store_count(); ++s) {
    auto rs = ds.store_reviews(s);
    if (rs.empty()) continue;
    double sum = 0.0;
    for (ReviewIndex r : rs) sum += ds.review(r).star;
    mean[s] = sum / static_cast<double>(rs.size());
  }
  return mean;
}

// 3 * triangles / connected triples of the unweighted subgraph induced by
// `members`; 0 when there are no triples.
inline double global_clustering_coefficient(const CollusionGraph& g, std::span<const UserIndex> members) {
  std::vector<UserIndex> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  auto inside = [&](UserIndex n) { return std::binary_search(sorted.begin(), sorted.end(), n); };

  std::vector<std::vector<UserIndex>> adj(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (const Neighbor& nb : g.neighbors(sorted[i])) {
      if (inside(nb.node)) adj[i].push_back(nb.node);
    }
  }
  double triples = 0.0;
  std::uint64_t triangles = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double d = static_cast<double>(adj[i].size());
    triples += d * (d - 1.0) / 2.0;
    // Count each triangle once at its smallest vertex.
    for (std::size_t a = 0; a < adj[i].size(); ++a) {
      if (adj[i][a] < sorted[i]) continue;
      for (std::size_t b = a + 1; b < adj[i].size(); ++b) {
        if (adj[i][b] < sorted[i]) continue;
        if (g.weight(adj[i][a], adj[i][b])) ++triangles;
      }
    }
  }
  if (triples <= 0.0) return 0.0;
  return 3.0 * static_cast<double>(triangles) / triples;
}

// Eight community descriptors: behaviour of the community's reviews, its
// link structure in the collusion graph, and per-member repetition.
inline FeatureVector extract_features(std::span<const UserIndex> members, const ReviewDataset& ds,
                                      const CollusionGraph& g, std::span<const double> store_mean,
                                      ScoreDeviationMode mode = ScoreDeviationMode::kMeanAbsolute) {
  if (members.size() < 2) throw ValidationError("community needs at least 2 members for features");

  std::vector<UserIndex> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());

  FeatureVector f;
  std::size_t review_total = 0;
  double deviation_sum = 0.0;
  std::map<StoreIndex, std::size_t> per_store;
  std::map<std::string, std::size_t> per_chain;
  std::map<std::string, std::size_t> per_district;
  double unique_ratio_sum = 0.0;

  for (UserIndex u : sorted) {
    auto rs = ds.user_reviews(u);
    if (rs.empty()) throw ValidationError("community member " + ds.user_id(u) + " has no reviews");
    std::map<StoreIndex, int> mine;
    for (ReviewIndex r : rs) {
      const StoreIndex s = ds.review_store(r);
      const double dev = ds.review(r).star - store_mean[s];
      deviation_sum += mode == ScoreDeviationMode::kMeanAbsolute ? std::abs(dev) : dev * dev;
      ++per_store[s];
      ++mine[s];
      const Store& store = ds.store(s);
      ++per_chain[store.chain_id ? "chain:" + *store.chain_id : "store:" + store.store_id];
      ++per_district[store.district];
    }
    review_total += rs.size();
    unique_ratio_sum += static_cast<double>(mine.size()) / static_cast<double>(rs.size());
    for (const auto& [s, count] : mine) f.max_duplication = std::max(f.max_duplication, count);
  }

  const double n = static_cast<double>(review_total);
  f.score_deviation = mode == ScoreDeviationMode::kMeanAbsolute ? deviation_sum / n
                                                                : std::sqrt(deviation_sum / n);
  f.avg_reviews_per_store = n / static_cast<double>(per_store.size());

  std::vector<std::size_t> chain_counts, district_counts;
  for (const auto& [k, c] : per_chain) chain_counts.push_back(c);
  for (const auto& [k, c] : per_district) district_counts.push_back(c);
  f.entropy_chain = entropy_bits(chain_counts);
  f.entropy_district = entropy_bits(district_counts);

  double weight_sum = 0.0;
  std::size_t edge_count = 0;
  for (UserIndex u : sorted) {
    for (const Neighbor& nb : g.neighbors(u)) {
      if (nb.node > u && std::binary_search(sorted.begin(), sorted.end(), nb.node)) {
        weight_sum += nb.weight;
        ++edge_count;
      }
    }
  }
  f.avg_similarity = edge_count == 0 ? 0.0 : weight_sum / static_cast<double>(edge_count);
  f.global_clustering_coeff = global_clustering_coefficient(g, sorted);
  f.unique_reviews_ratio = unique_ratio_sum / static_cast<double>(members.size());
  return f;
}

}  // namespace sybilwatch
