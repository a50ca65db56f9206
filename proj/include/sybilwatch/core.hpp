#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sybilwatch {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;
using Duration = std::int64_t;

inline constexpr Duration kSecondsPerDay = 86400;
inline constexpr Duration kSecondsPerWeek = 7 * kSecondsPerDay;

using UserIndex = std::uint32_t;
using StoreIndex = std::uint32_t;
using ReviewIndex = std::uint32_t;
using CommunityId = std::uint32_t;

// UTC calendar day containing `ts`.
inline std::int64_t day_of(Timestamp ts) {
  return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

inline Timestamp day_start(Timestamp ts) { return day_of(ts) * kSecondsPerDay; }

// Input that violates a data or configuration invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A phase was asked to run before the artifacts it depends on exist.
class PrerequisiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Review {
  std::string review_id;
  std::string user_id;
  std::string store_id;
  Timestamp timestamp = 0;
  int star = 0;

  friend bool operator==(const Review&, const Review&) = default;
};

struct Store {
  std::string store_id;
  std::string district;
  std::optional<std::string> chain_id;
  std::optional<std::string> category;

  friend bool operator==(const Store&, const Store&) = default;
};

inline bool is_valid_star(int star) { return star >= 1 && star <= 5; }

// Immutable review collection with per-user and per-store buckets sorted by
// timestamp. User and store indices follow lexicographic id order so every
// derived artifact is independent of input order.
class ReviewDataset {
 public:
  ReviewDataset() = default;

  static ReviewDataset build(std::vector<Review> reviews, std::vector<Store> stores) {
    if (reviews.empty()) throw ValidationError("empty dataset");
    if (stores.empty()) throw ValidationError("dataset has no stores");

    ReviewDataset ds;
    ds.stores_ = std::move(stores);
    std::sort(ds.stores_.begin(), ds.stores_.end(),
              [](const Store& a, const Store& b) { return a.store_id < b.store_id; });
    for (std::size_t i = 0; i < ds.stores_.size(); ++i) {
      if (i > 0 && ds.stores_[i].store_id == ds.stores_[i - 1].store_id)
        throw ValidationError("duplicate store_id " + ds.stores_[i].store_id);
      ds.store_lookup_.emplace(ds.stores_[i].store_id, static_cast<StoreIndex>(i));
    }

    std::unordered_set<std::string_view> seen_ids;
    seen_ids.reserve(reviews.size());
    std::vector<std::string_view> user_ids;
    for (const Review& r : reviews) {
      if (!is_valid_star(r.star))
        throw ValidationError("review " + r.review_id + ": star " + std::to_string(r.star) +
                              " out of range 1..5");
      if (!ds.store_lookup_.contains(r.store_id))
        throw ValidationError("review " + r.review_id + " references unknown store " + r.store_id);
    }
    ds.reviews_ = std::move(reviews);
    for (const Review& r : ds.reviews_) {
      if (!seen_ids.insert(r.review_id).second)
        throw ValidationError("duplicate review_id " + r.review_id);
      user_ids.push_back(r.user_id);
    }

    std::sort(user_ids.begin(), user_ids.end());
    user_ids.erase(std::unique(user_ids.begin(), user_ids.end()), user_ids.end());
    ds.user_ids_.assign(user_ids.begin(), user_ids.end());
    for (std::size_t i = 0; i < ds.user_ids_.size(); ++i)
      ds.user_lookup_.emplace(ds.user_ids_[i], static_cast<UserIndex>(i));

    const std::size_t n = ds.reviews_.size();
    ds.review_user_.resize(n);
    ds.review_store_.resize(n);
    ds.t_min_ = ds.reviews_.front().timestamp;
    ds.t_max_ = ds.reviews_.front().timestamp;
    for (std::size_t i = 0; i < n; ++i) {
      const Review& r = ds.reviews_[i];
      ds.review_user_[i] = ds.user_lookup_.at(r.user_id);
      ds.review_store_[i] = ds.store_lookup_.at(r.store_id);
      ds.t_min_ = std::min(ds.t_min_, r.timestamp);
      ds.t_max_ = std::max(ds.t_max_, r.timestamp);
    }

    ds.bucket(ds.review_user_, ds.user_ids_.size(), ds.user_offsets_, ds.user_reviews_);
    ds.bucket(ds.review_store_, ds.stores_.size(), ds.store_offsets_, ds.store_reviews_);
    return ds;
  }

  std::span<const Review> reviews() const { return reviews_; }
  const Review& review(ReviewIndex r) const { return reviews_[r]; }
  std::size_t review_count() const { return reviews_.size(); }

  std::span<const Store> stores() const { return stores_; }
  const Store& store(StoreIndex s) const { return stores_[s]; }
  std::size_t store_count() const { return stores_.size(); }

  std::size_t user_count() const { return user_ids_.size(); }
  const std::string& user_id(UserIndex u) const { return user_ids_[u]; }

  std::optional<UserIndex> find_user(std::string_view id) const {
    auto it = user_lookup_.find(std::string(id));
    if (it == user_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<StoreIndex> find_store(std::string_view id) const {
    auto it = store_lookup_.find(std::string(id));
    if (it == store_lookup_.end()) return std::nullopt;
    return it->second;
  }

  UserIndex review_user(ReviewIndex r) const { return review_user_[r]; }
  StoreIndex review_store(ReviewIndex r) const { return review_store_[r]; }

  // Reviews of `u`, ascending by (timestamp, input position).
  std::span<const ReviewIndex> user_reviews(UserIndex u) const {
    return std::span(user_reviews_).subspan(user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]);
  }
  std::span<const ReviewIndex> store_reviews(StoreIndex s) const {
    return std::span(store_reviews_).subspan(store_offsets_[s],
                                             store_offsets_[s + 1] - store_offsets_[s]);
  }

  Timestamp t_min() const { return t_min_; }
  Timestamp t_max() const { return t_max_; }

 private:
  void bucket(const std::vector<std::uint32_t>& key, std::size_t buckets,
              std::vector<std::size_t>& offsets, std::vector<ReviewIndex>& out) const {
    offsets.assign(buckets + 1, 0);
    for (std::uint32_t k : key) ++offsets[k + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    out.resize(key.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < key.size(); ++i) out[cursor[key[i]]++] = static_cast<ReviewIndex>(i);
    for (std::size_t b = 0; b < buckets; ++b) {
      std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(offsets[b]),
                       out.begin() + static_cast<std::ptrdiff_t>(offsets[b + 1]),
                       [this](ReviewIndex a, ReviewIndex c) {
                         return reviews_[a].timestamp < reviews_[c].timestamp;
                       });
    }
  }

  std::vector<Review> reviews_;
  std::vector<Store> stores_;
  std::vector<std::string> user_ids_;
  std::unordered_map<std::string, UserIndex> user_lookup_;
  std::unordered_map<std::string, StoreIndex> store_lookup_;
  std::vector<UserIndex> review_user_;
  std::vector<StoreIndex> review_store_;
  std::vector<std::size_t> user_offsets_;
  std::vector<ReviewIndex> user_reviews_;
  std::vector<std::size_t> store_offsets_;
  std::vector<ReviewIndex> store_reviews_;
  Timestamp t_min_ = 0;
  Timestamp t_max_ = 0;
};

enum class ScoreDeviationMode { kMeanAbsolute, kStdDev };

// Which sparse prefix/suffix the campaign window search strips per step.
enum class SparseRule { kShortest, kLongest };

// Which users define the mean and spread fed into the participation sigmoid.
enum class RhoPopulation {
  kCandidates,  // non-members with at least one review inside a window
  kMembers,     // community members, scored over the same windows
};

struct PipelineConfig {
  Duration delta_t = 7 * kSecondsPerDay;
  double beta_thre = 0.2;
  Duration week_len = kSecondsPerWeek;
  Duration alert_window = 7 * kSecondsPerDay;
  int alert_threshold = 7;
  double elite_rho_cutoff = 0.5;
  double svm_c = 18.0;
  double svm_gamma = 0.09;
  double svm_tolerance = 1e-3;
  int cv_folds = 5;
  bool grid_search = false;
  int min_campaign_reviews = 3;
  double sigma_floor = 1e-9;
  ScoreDeviationMode score_deviation = ScoreDeviationMode::kMeanAbsolute;
  RhoPopulation rho_population = RhoPopulation::kCandidates;
  SparseRule sparse_rule = SparseRule::kShortest;
  std::uint64_t seed = 42;
  // 0 selects the hardware concurrency. Never affects outputs.
  unsigned workers = 0;

  void validate() const {
    if (delta_t <= 0) throw ValidationError("delta_t must be positive");
    if (!(beta_thre >= 0.0 && beta_thre <= 1.0)) throw ValidationError("beta_thre must lie in [0,1]");
    if (week_len <= 0) throw ValidationError("week_len must be positive");
    if (alert_window < kSecondsPerDay || alert_window % kSecondsPerDay != 0)
      throw ValidationError("alert_window must be a positive whole number of days");
    if (alert_threshold < 1) throw ValidationError("alert_threshold must be >= 1");
    if (!std::isfinite(elite_rho_cutoff)) throw ValidationError("elite_rho_cutoff must be finite");
    if (!(svm_c > 0.0) || !(svm_gamma > 0.0)) throw ValidationError("svm C and gamma must be positive");
    if (!(svm_tolerance > 0.0)) throw ValidationError("svm tolerance must be positive");
    if (cv_folds < 2) throw ValidationError("cv_folds must be >= 2");
    if (min_campaign_reviews < 1) throw ValidationError("min_campaign_reviews must be >= 1");
    if (!(sigma_floor > 0.0)) throw ValidationError("sigma_floor must be positive");
  }
};

}  // namespace sybilwatch
