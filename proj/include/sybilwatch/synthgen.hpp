#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sybilwatch/core.hpp"

namespace sybilwatch {

struct SynthParams {
  std::size_t n_benign_users = 20000;
  double benign_rate = 1.0;        // mean reviews per user per month
  double benign_rate_spread = 1.0;  // lognormal sigma of per-user rates
  double home_district_bias = 0.7;

  std::size_t n_stores = 1500;
  std::size_t n_districts = 20;
  std::size_t n_chains = 40;
  double chain_membership = 0.3;
  std::size_t n_categories = 8;
  double popularity_exponent = 0.9;

  std::size_t n_communities = 100;
  std::size_t members_min = 8;
  std::size_t members_max = 20;
  std::size_t campaigns_min = 3;
  std::size_t campaigns_max = 6;
  std::size_t campaign_weeks_min = 4;
  std::size_t campaign_weeks_max = 10;
  std::size_t fake_per_campaign_min = 1;
  std::size_t fake_per_campaign_max = 3;
  double member_participation = 0.85;
  double regular_noise_reviews = 2.0;  // mean non-campaign reviews per regular Sybil
  double demotion_probability = 0.1;
  double weekly_periodicity = 0.5;     // share of campaigns posting on a fixed weekday
  double noise_tail_probability = 0.3;  // stray member visit weeks before/after a campaign

  std::size_t n_elite_users = 750;
  std::size_t elite_communities = 2;  // communities each elite user works for
  double elite_participation = 0.8;
  double elite_smoke_rate = 10.0;  // genuine-looking reviews per month
  double elite_wave_days = 5.0;    // elite campaign reviews land in one burst

  std::int64_t horizon_days = 365;
  Timestamp start = 1420070400;  // 2015-01-01T00:00:00Z
  std::uint64_t seed = 7;

  void validate() const {
    if (n_stores == 0 || n_districts == 0) throw ValidationError("synth needs stores and districts");
    if (horizon_days <= 0) throw ValidationError("horizon must be positive");
    if (members_min < 2 || members_min > members_max) throw ValidationError("bad members range");
    if (campaigns_min < 1 || campaigns_min > campaigns_max) throw ValidationError("bad campaigns range");
    if (campaign_weeks_min < 1 || campaign_weeks_min > campaign_weeks_max)
      throw ValidationError("bad campaign length range");
    if (fake_per_campaign_min < 1 || fake_per_campaign_min > fake_per_campaign_max)
      throw ValidationError("bad fake review range");
    if (static_cast<std::int64_t>(campaign_weeks_max) * 7 > horizon_days)
      throw ValidationError("campaign longer than the simulation horizon");
    if (n_communities > 0 && n_stores < campaigns_max)
      throw ValidationError("not enough stores for distinct campaign targets");
    if (n_elite_users > 0 && n_communities == 0)
      throw ValidationError("elite users need communities to work for");
    for (double p : {home_district_bias, chain_membership, member_participation, demotion_probability,
                     weekly_periodicity, noise_tail_probability, elite_participation}) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probabilities must lie in [0,1]");
    }
    if (benign_rate < 0 || elite_smoke_rate < 0 || regular_noise_reviews < 0)
      throw ValidationError("rates must be non-negative");
  }
};

struct PlantedCampaign {
  std::uint32_t community = 0;
  std::string store_id;
  std::int64_t start_week = 0;  // weeks since GroundTruth::origin
  std::int64_t end_week = 0;    // inclusive
  Timestamp start_ts = 0;
  Timestamp end_ts = 0;
  int star = 5;

  friend bool operator==(const PlantedCampaign&, const PlantedCampaign&) = default;
};

struct GroundTruth {
  Timestamp origin = 0;
  std::vector<std::string> sybil_users;  // regular community members
  std::vector<std::string> elite_users;
  std::map<std::uint32_t, std::vector<std::string>> communities;
  std::vector<PlantedCampaign> campaigns;
  std::vector<std::string> fake_reviews;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SynthOutput {
  std::vector<Review> reviews;
  std::vector<Store> stores;
  GroundTruth truth;
};

namespace detail {

class SynthWorld {
 public:
  explicit SynthWorld(const SynthParams& p) : p_(p), rng_(p.seed) {}

  SynthOutput run() {
    make_stores();
    make_users();
    plant_communities();
    for (std::size_t u = 0; u < p_.n_benign_users; ++u) {
      const double rate = benign_rate_();
      post_background(benign_ids_[u], rate, home_[benign_ids_[u]], /*at_least_one=*/true);
    }
    return finish();
  }

 private:
  struct Pending {
    std::size_t user;
    StoreIndex store;
    Timestamp ts;
    int star;
    bool fake;
  };

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t pick(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  std::size_t poisson(double mean) {
    if (mean <= 0) return 0;
    return static_cast<std::size_t>(std::poisson_distribution<long>(mean)(rng_));
  }
  double months() const { return static_cast<double>(p_.horizon_days) / 30.4375; }
  Timestamp horizon_end() const { return p_.start + p_.horizon_days * kSecondsPerDay - 1; }

  void make_stores() {
    const std::size_t n = p_.n_stores;
    std::vector<double> popularity(n);
    for (std::size_t i = 0; i < n; ++i)
      popularity[i] = std::pow(static_cast<double>(i) + 10.0, -p_.popularity_exponent);
    std::shuffle(popularity.begin(), popularity.end(), rng_);
    std::normal_distribution<double> quality(3.5, 0.5);
    std::vector<std::vector<double>> by_district(p_.n_districts, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      Store s;
      s.store_id = "s" + pad(i, 5);
      const std::size_t d = pick(0, p_.n_districts - 1);
      s.district = "d" + pad(d, 3);
      if (p_.n_chains > 0 && uniform() < p_.chain_membership) s.chain_id = "c" + pad(pick(0, p_.n_chains - 1), 3);
      if (p_.n_categories > 0) s.category = "k" + pad(pick(0, p_.n_categories - 1), 2);
      stores_.push_back(s);
      quality_.push_back(std::clamp(quality(rng_), 2.0, 4.6));
      district_of_.push_back(d);
      by_district[d][i] = popularity[i];
    }
    global_pick_ = std::discrete_distribution<std::size_t>(popularity.begin(), popularity.end());
    for (std::size_t d = 0; d < p_.n_districts; ++d) {
      double total = 0;
      for (double w : by_district[d]) total += w;
      if (total <= 0) by_district[d] = popularity;
      district_pick_.emplace_back(by_district[d].begin(), by_district[d].end());
    }
  }

  void make_users() {
    const std::size_t total = p_.n_benign_users + p_.n_communities * p_.members_max + p_.n_elite_users;
    // Opaque ids: a seeded permutation hides the role of every account.
    std::vector<std::size_t> ids(total);
    for (std::size_t i = 0; i < total; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng_);
    id_pool_ = std::move(ids);
    for (std::size_t u = 0; u < p_.n_benign_users; ++u) benign_ids_.push_back(new_user());
    for (std::size_t e = 0; e < p_.n_elite_users; ++e) elite_ids_.push_back(new_user());
    std::lognormal_distribution<double> rates(0.0, p_.benign_rate_spread);
    const double correction = std::exp(p_.benign_rate_spread * p_.benign_rate_spread / 2.0);
    benign_rate_ = [this, rates, correction]() mutable {
      return p_.benign_rate * rates(rng_) / correction;
    };
  }

  std::size_t new_user() {
    const std::size_t u = user_names_.size();
    user_names_.push_back("u" + pad(id_pool_.at(u), 7));
    home_.push_back(pick(0, p_.n_districts - 1));
    return u;
  }

  StoreIndex random_store(std::size_t home) {
    if (uniform() < p_.home_district_bias) return static_cast<StoreIndex>(district_pick_[home](rng_));
    return static_cast<StoreIndex>(global_pick_(rng_));
  }

  int genuine_star(StoreIndex s) {
    std::normal_distribution<double> noise(quality_[s], 0.8);
    return static_cast<int>(std::clamp(std::lround(noise(rng_)), 1L, 5L));
  }

  Timestamp random_time(Timestamp lo, Timestamp hi) {
    return std::uniform_int_distribution<Timestamp>(lo, hi)(rng_);
  }

  void post_background(std::size_t user, double monthly_rate, std::size_t home, bool at_least_one) {
    std::size_t n = poisson(monthly_rate * months());
    if (at_least_one) n = std::max<std::size_t>(n, 1);
    // Genuine users rarely review the same store twice.
    std::set<StoreIndex> seen;
    for (std::size_t i = 0; i < n; ++i) {
      StoreIndex s = random_store(home);
      for (int attempt = 0; attempt < 20 && seen.contains(s); ++attempt) s = random_store(home);
      if (!seen.insert(s).second) continue;
      pending_.push_back({user, s, random_time(p_.start, horizon_end()), genuine_star(s), false});
    }
  }

  void plant_communities() {
    truth_.origin = p_.start;
    std::vector<std::size_t> store_order(p_.n_stores);
    for (std::size_t i = 0; i < store_order.size(); ++i) store_order[i] = i;
    std::shuffle(store_order.begin(), store_order.end(), rng_);
    std::size_t next_store = 0;

    std::vector<std::vector<std::size_t>> elite_pool(p_.n_communities);
    for (std::size_t e = 0; e < elite_ids_.size(); ++e) {
      std::set<std::size_t> chosen;
      const std::size_t want = std::min(p_.elite_communities, p_.n_communities);
      while (chosen.size() < want) chosen.insert(pick(0, p_.n_communities - 1));
      for (std::size_t c : chosen) elite_pool[c].push_back(elite_ids_[e]);
    }
    for (std::size_t e : elite_ids_) post_background(e, p_.elite_smoke_rate, home_[e], true);

    const std::int64_t horizon_weeks = p_.horizon_days / 7;
    for (std::size_t c = 0; c < p_.n_communities; ++c) {
      const std::size_t size = pick(p_.members_min, p_.members_max);
      const std::size_t home = pick(0, p_.n_districts - 1);
      std::vector<std::size_t> members;
      for (std::size_t m = 0; m < size; ++m) {
        const std::size_t u = new_user();
        home_[u] = home;
        members.push_back(u);
        truth_.communities[static_cast<std::uint32_t>(c)].push_back(user_names_[u]);
        sybil_set_.push_back(u);
        post_background(u, p_.regular_noise_reviews / months(), home, false);
      }

      const std::size_t n_campaigns = pick(p_.campaigns_min, p_.campaigns_max);
      for (std::size_t k = 0; k < n_campaigns; ++k) {
        const StoreIndex store =
            static_cast<StoreIndex>(store_order[next_store++ % store_order.size()]);
        const auto weeks = static_cast<std::int64_t>(pick(p_.campaign_weeks_min, p_.campaign_weeks_max));
        const auto start_week = static_cast<std::int64_t>(pick(0, static_cast<std::size_t>(horizon_weeks - weeks)));
        PlantedCampaign pc;
        pc.community = static_cast<std::uint32_t>(c);
        pc.store_id = stores_[store].store_id;
        pc.start_week = start_week;
        pc.end_week = start_week + weeks - 1;
        pc.start_ts = p_.start + start_week * kSecondsPerWeek;
        pc.end_ts = pc.start_ts + weeks * kSecondsPerWeek - 1;
        pc.star = uniform() < p_.demotion_probability ? 1 : 5;
        truth_.campaigns.push_back(pc);
        run_campaign(pc, store, weeks, members, elite_pool[c]);
      }
    }
  }

  Timestamp campaign_time(Timestamp week_start, std::int64_t weekday) {
    if (weekday < 0) return random_time(week_start, week_start + kSecondsPerWeek - 1);
    const Timestamp day = week_start + weekday * kSecondsPerDay;
    return random_time(day, day + kSecondsPerDay - 1);
  }

  void run_campaign(const PlantedCampaign& pc, StoreIndex store, std::int64_t weeks,
                    const std::vector<std::size_t>& members, const std::vector<std::size_t>& elites) {
    const std::int64_t weekday = uniform() < p_.weekly_periodicity ? static_cast<std::int64_t>(pick(0, 6)) : -1;

    // Regular members: the task board releases work every week, so every
    // week of the campaign sees at least one member review.
    std::vector<std::size_t> posters;
    for (std::size_t u : members) {
      if (uniform() >= p_.member_participation) continue;
      const std::size_t n = pick(p_.fake_per_campaign_min, p_.fake_per_campaign_max);
      for (std::size_t i = 0; i < n; ++i) posters.push_back(u);
    }
    if (posters.empty()) posters.push_back(members[pick(0, members.size() - 1)]);
    while (posters.size() < static_cast<std::size_t>(weeks)) posters.push_back(members[pick(0, members.size() - 1)]);
    std::shuffle(posters.begin(), posters.end(), rng_);
    for (std::size_t i = 0; i < posters.size(); ++i) {
      const std::int64_t week = i < static_cast<std::size_t>(weeks)
                                    ? static_cast<std::int64_t>(i)
                                    : static_cast<std::int64_t>(pick(0, static_cast<std::size_t>(weeks - 1)));
      const Timestamp ts = campaign_time(pc.start_ts + week * kSecondsPerWeek, weekday);
      pending_.push_back({posters[i], store, ts, pc.star, true});
    }

    if (uniform() < p_.noise_tail_probability) {
      const std::int64_t gap = static_cast<std::int64_t>(pick(4, 9));
      const bool before = uniform() < 0.5;
      const Timestamp ts = before ? pc.start_ts - gap * kSecondsPerWeek + static_cast<Timestamp>(pick(0, 6)) * kSecondsPerDay
                                  : pc.end_ts + 1 + (gap - 1) * kSecondsPerWeek +
                                        static_cast<Timestamp>(pick(0, 6)) * kSecondsPerDay;
      if (ts >= p_.start && ts <= horizon_end())
        pending_.push_back({members[pick(0, members.size() - 1)], store, ts, genuine_star(store), false});
    }

    // Elite users answer one recruitment burst, front-loaded in the campaign.
    if (elites.empty()) return;
    const double u = uniform();
    const auto wave_week = static_cast<std::int64_t>(u * u * static_cast<double>(weeks - 1) + 0.5);
    const Timestamp wave_start = pc.start_ts + wave_week * kSecondsPerWeek;
    const auto wave_span = static_cast<Timestamp>(p_.elite_wave_days * static_cast<double>(kSecondsPerDay));
    for (std::size_t e : elites) {
      if (uniform() >= p_.elite_participation) continue;
      Timestamp ts = wave_start + random_time(0, wave_span - 1);
      ts = std::min(ts, pc.end_ts);
      pending_.push_back({e, store, ts, pc.star, true});
    }
  }

  SynthOutput finish() {
    SynthOutput out;
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const Pending& a, const Pending& b) { return a.ts < b.ts; });
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      const Pending& pr = pending_[i];
      Review r;
      r.review_id = "r" + pad(i, 8);
      r.user_id = user_names_[pr.user];
      r.store_id = stores_[pr.store].store_id;
      r.timestamp = pr.ts;
      r.star = pr.star;
      if (pr.fake) out.truth.fake_reviews.push_back(r.review_id);
      out.reviews.push_back(std::move(r));
    }
    out.stores = stores_;
    out.truth.origin = truth_.origin;
    out.truth.communities = truth_.communities;
    out.truth.campaigns = truth_.campaigns;
    for (std::size_t u : sybil_set_) out.truth.sybil_users.push_back(user_names_[u]);
    for (std::size_t e : elite_ids_) out.truth.elite_users.push_back(user_names_[e]);
    std::sort(out.truth.sybil_users.begin(), out.truth.sybil_users.end());
    std::sort(out.truth.elite_users.begin(), out.truth.elite_users.end());
    for (auto& [c, m] : out.truth.communities) std::sort(m.begin(), m.end());
    // Users who never posted (members skipped by every campaign) are dropped.
    std::set<std::string> posted;
    for (const Review& r : out.reviews) posted.insert(r.user_id);
    auto prune = [&](std::vector<std::string>& v) {
      v.erase(std::remove_if(v.begin(), v.end(), [&](const std::string& s) { return !posted.contains(s); }), v.end());
    };
    prune(out.truth.sybil_users);
    prune(out.truth.elite_users);
    for (auto& [c, m] : out.truth.communities) prune(m);
    return out;
  }

  static std::string pad(std::size_t v, int width) {
    std::string s = std::to_string(v);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
  }

  const SynthParams& p_;
  std::mt19937_64 rng_;
  std::vector<Store> stores_;
  std::vector<double> quality_;
  std::vector<std::size_t> district_of_;
  std::discrete_distribution<std::size_t> global_pick_;
  std::vector<std::discrete_distribution<std::size_t>> district_pick_;
  std::vector<std::size_t> id_pool_;
  std::vector<std::string> user_names_;
  std::vector<std::size_t> home_;
  std::vector<std::size_t> benign_ids_;
  std::vector<std::size_t> elite_ids_;
  std::vector<std::size_t> sybil_set_;
  std::function<double()> benign_rate_;
  std::vector<Pending> pending_;
  GroundTruth truth_;
};

}  // namespace detail

// Deterministic given params.seed.
inline SynthOutput generate(const SynthParams& params) {
  params.validate();
  return detail::SynthWorld(params).run();
}

// Default parameters scaled so the dataset holds roughly `target_reviews`.
inline SynthParams scaled_params(std::size_t target_reviews, std::uint64_t seed = 7) {
  SynthParams p;
  p.seed = seed;
  const double base = 345000.0;
  const double f = std::max(0.01, static_cast<double>(target_reviews) / base);
  p.n_benign_users = static_cast<std::size_t>(std::lround(static_cast<double>(p.n_benign_users) * f));
  p.n_stores = std::max<std::size_t>(50, static_cast<std::size_t>(std::lround(static_cast<double>(p.n_stores) * f)));
  p.n_communities = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(static_cast<double>(p.n_communities) * f)));
  p.n_elite_users = static_cast<std::size_t>(std::lround(static_cast<double>(p.n_elite_users) * f));
  return p;
}

}  // namespace sybilwatch
