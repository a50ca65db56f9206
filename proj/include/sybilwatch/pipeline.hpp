#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sybilwatch/alert.hpp"
#include "sybilwatch/campaign.hpp"
#include "sybilwatch/classifier.hpp"
#include "sybilwatch/collusion_graph.hpp"
#include "sybilwatch/community.hpp"
#include "sybilwatch/elite.hpp"
#include "sybilwatch/evaluation.hpp"
#include "sybilwatch/features.hpp"
#include "sybilwatch/io.hpp"
#include "sybilwatch/parallel.hpp"

namespace sybilwatch {

inline constexpr const char* kVersion = "1.0.0";

// Everything the phases produce. Optional members are filled as phases run
// (or are reloaded from artifacts by the CLI).
struct PipelineState {
  PipelineConfig config;

  std::optional<CollusionGraph> graph;

  // Communities with >= 2 members come first, as ids [0, community_count);
  // pruned singletons follow.
  std::optional<Partition> partition;
  std::size_t community_count = 0;
  std::vector<double> modularity_trace;

  std::optional<std::vector<FeatureVector>> features;  // by community id

  std::map<CommunityId, Label> labels;
  bool labels_derived = false;
  std::optional<TrainedModel> model;
  std::optional<EvalMetrics> cv_metrics;

  std::optional<std::vector<std::pair<Label, double>>> predictions;  // by community id

  std::optional<CampaignExtraction> campaigns;
  std::optional<EliteScoring> elite;
  std::optional<std::vector<Alert>> alerts;
  std::optional<Json> evaluation;

  std::vector<std::pair<std::string, double>> timings;  // seconds per phase

  std::vector<CommunityId> sybil_communities() const {
    std::vector<CommunityId> out;
    if (!predictions) return out;
    for (CommunityId c = 0; c < predictions->size(); ++c) {
      if ((*predictions)[c].first == Label::kSybil) out.push_back(c);
    }
    return out;
  }
};

// Puts multi-member communities first (ordered by smallest member) and
// singletons after them.
inline Partition prune_singletons(const Partition& p, std::size_t& community_count) {
  std::vector<std::uint32_t> raw(p.assignment.size());
  std::vector<std::uint32_t> remap(p.size());
  std::uint32_t next = 0;
  for (CommunityId c = 0; c < p.size(); ++c) {
    if (p.communities[c].size() >= 2) remap[c] = next++;
  }
  community_count = next;
  for (CommunityId c = 0; c < p.size(); ++c) {
    if (p.communities[c].size() < 2) remap[c] = next++;
  }
  Partition out;
  out.assignment.resize(p.assignment.size());
  out.communities.resize(p.size());
  for (CommunityId c = 0; c < p.size(); ++c) {
    out.communities[remap[c]] = p.communities[c];
    for (UserIndex u : p.communities[c]) out.assignment[u] = remap[c];
  }
  return out;
}

namespace detail {

class PhaseTimer {
 public:
  PhaseTimer(PipelineState& s, std::string name)
      : state_(s), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    state_.timings.emplace_back(name_, elapsed);
  }

 private:
  PipelineState& state_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

inline void require(bool present, const char* what, const char* phase) {
  if (!present) throw PrerequisiteError(std::string("missing ") + what + "; run '" + phase + "' first");
}

}  // namespace detail

inline void run_graph(PipelineState& s, const ReviewDataset& ds) {
  detail::PhaseTimer t(s, "graph");
  s.graph = build_graph(ds, s.config.delta_t, s.config.beta_thre, s.config.workers);
}

inline void run_cluster(PipelineState& s) {
  detail::require(s.graph.has_value(), "collusion graph", "graph");
  detail::PhaseTimer t(s, "cluster");
  LouvainResult lr = louvain(*s.graph, s.config.seed);
  s.partition = prune_singletons(lr.partition, s.community_count);
  s.modularity_trace = std::move(lr.modularity_trace);
}

inline void run_features(PipelineState& s, const ReviewDataset& ds) {
  detail::require(s.graph.has_value(), "collusion graph", "graph");
  detail::require(s.partition.has_value(), "communities", "cluster");
  detail::PhaseTimer t(s, "features");
  const auto means = store_mean_stars(ds);
  std::vector<FeatureVector> out(s.community_count);
  parallel_for(s.community_count, s.config.workers, [&](std::size_t c) {
    out[c] = extract_features(s.partition->communities[c], ds, *s.graph, means, s.config.score_deviation);
  }, 4);
  s.features = std::move(out);
}

inline void run_train(PipelineState& s) {
  detail::require(s.features.has_value(), "community features", "features");
  if (s.labels.empty()) throw PrerequisiteError("missing community labels; pass --labels or --ground-truth");
  detail::PhaseTimer t(s, "train");
  std::vector<LabeledExample> data;
  for (const auto& [c, label] : s.labels) {
    if (c >= s.community_count)
      throw ValidationError("label references unknown community " + std::to_string(c));
    const auto v = (*s.features)[c].values();
    data.push_back({"community " + std::to_string(c), std::vector<double>(v.begin(), v.end()), label});
  }
  SvmParams params{s.config.svm_c, s.config.svm_gamma, s.config.svm_tolerance};
  TrainResult tr = train(data, params, s.config.cv_folds, s.config.seed, s.config.grid_search);
  s.model = std::move(tr.model);
  s.cv_metrics = std::move(tr.cv);
}

inline void run_classify(PipelineState& s) {
  detail::require(s.features.has_value(), "community features", "features");
  detail::require(s.model.has_value(), "trained model", "train");
  detail::PhaseTimer t(s, "classify");
  std::vector<std::pair<Label, double>> out;
  for (const FeatureVector& f : *s.features) {
    const auto v = f.values();
    out.push_back(s.model->predict(v));
  }
  s.predictions = std::move(out);
}

inline void run_windows(PipelineState& s, const ReviewDataset& ds) {
  detail::require(s.partition.has_value(), "communities", "cluster");
  detail::require(s.predictions.has_value(), "community classification", "classify");
  detail::PhaseTimer t(s, "windows");
  const auto sybil = s.sybil_communities();
  s.campaigns = extract_campaigns(ds, *s.partition, sybil, s.config.week_len, s.config.min_campaign_reviews,
                                  s.config.sparse_rule);
}

inline void run_score(PipelineState& s, const ReviewDataset& ds) {
  detail::require(s.partition.has_value(), "communities", "cluster");
  detail::require(s.predictions.has_value(), "community classification", "classify");
  detail::require(s.campaigns.has_value(), "campaign windows", "windows");
  detail::PhaseTimer t(s, "score");
  EliteOptions opt{s.config.elite_rho_cutoff, s.config.sigma_floor, s.config.rho_population};
  s.elite = score_elite(ds, *s.partition, s.campaigns->campaigns, s.sybil_communities(), opt);
  for (const auto& e : s.elite->elite) {
    if (s.partition->communities[s.partition->assignment[e.user]].size() >= 2)
      throw std::logic_error("elite user " + ds.user_id(e.user) + " belongs to a detected community");
  }
}

inline std::vector<std::uint8_t> elite_watchlist(const PipelineState& s, std::size_t users) {
  std::vector<std::uint8_t> w(users, 0);
  if (s.elite) {
    for (const auto& e : s.elite->elite) w[e.user] = 1;
  }
  return w;
}

inline void run_alert(PipelineState& s, const ReviewDataset& ds) {
  detail::require(s.elite.has_value(), "elite ranking", "score");
  detail::PhaseTimer t(s, "alert");
  const auto watch = elite_watchlist(s, ds.user_count());
  s.alerts = scan_alerts(ds, watch, static_cast<int>(s.config.alert_window / kSecondsPerDay),
                         s.config.alert_threshold);
}

inline Json metrics_json(const EvalMetrics& m) {
  Json j;
  j["precision"] = round9(m.precision);
  j["recall"] = round9(m.recall);
  j["f1"] = round9(m.f1);
  j["auc"] = m.auc ? Json(round9(*m.auc)) : Json(nullptr);
  Json folds = Json::array();
  for (const auto& f : m.folds) {
    folds.push_back({{"precision", round9(f.precision)},
                     {"recall", round9(f.recall)},
                     {"f1", round9(f.f1)},
                     {"auc", f.auc ? Json(round9(*f.auc)) : Json(nullptr)}});
  }
  j["folds"] = folds;
  return j;
}

// Ground-truth scoring of whatever phases have run.
inline void run_evaluate(PipelineState& s, const ReviewDataset& ds, const GroundTruth& gt) {
  detail::require(s.partition.has_value(), "communities", "cluster");
  detail::PhaseTimer t(s, "evaluate");
  Json j;
  if (s.predictions) {
    const auto truth_labels = derive_labels(ds, *s.partition, gt);
    std::vector<Label> pred, truth;
    std::vector<double> margins;
    for (const auto& [c, l] : truth_labels) {
      pred.push_back((*s.predictions)[c].first);
      margins.push_back((*s.predictions)[c].second);
      truth.push_back(l);
    }
    j["communities"] = truth.empty() ? Json(nullptr) : metrics_json(evaluate(pred, truth, margins));
  }
  if (s.campaigns) {
    const auto rec = campaign_recovery(ds, *s.partition, s.campaigns->campaigns, gt);
    j["campaign_recovery"] = {{"planted", rec.planted}, {"recovered", rec.recovered}, {"rate", round9(rec.rate)}};
  }
  if (s.elite) {
    const std::size_t k = std::min<std::size_t>(100, gt.elite_users.size());
    j["elite_precision_at_k"] = {{"k", k}, {"precision", k ? Json(round9(precision_at_k(s.elite->elite, ds, gt, k)))
                                                         : Json(nullptr)}};
  }
  if (s.alerts) {
    const auto periods = planted_periods(ds, gt);
    Json rates = Json::object();
    if (!periods.empty()) {
      const char* names[] = {"1/4", "1/3", "1/2", "1"};
      for (std::size_t i = 0; i < kPrefixFractions.size(); ++i)
        rates[names[i]] = round9(early_detection_rate(*s.alerts, periods, kPrefixFractions[i]));
    }
    j["early_detection"] = rates;
  }
  s.evaluation = std::move(j);
}

// All phases in order. Labels come from `labels` when given, otherwise they
// are derived from `truth`.
inline PipelineState run_pipeline(const ReviewDataset& ds, const PipelineConfig& config,
                                  const std::optional<std::map<CommunityId, Label>>& labels,
                                  const std::optional<GroundTruth>& truth) {
  config.validate();
  PipelineState s;
  s.config = config;
  run_graph(s, ds);
  run_cluster(s);
  run_features(s, ds);
  if (labels) {
    s.labels = *labels;
  } else if (truth) {
    s.labels = derive_labels(ds, *s.partition, *truth);
    s.labels_derived = true;
  }
  run_train(s);
  run_classify(s);
  run_windows(s, ds);
  run_score(s, ds);
  run_alert(s, ds);
  if (truth) run_evaluate(s, ds, *truth);
  return s;
}

inline Json config_to_json(const PipelineConfig& c) {
  Json j;
  j["delta_t_seconds"] = c.delta_t;
  j["beta_thre"] = c.beta_thre;
  j["week_len_seconds"] = c.week_len;
  j["alert_window_seconds"] = c.alert_window;
  j["alert_threshold"] = c.alert_threshold;
  j["elite_rho_cutoff"] = c.elite_rho_cutoff;
  j["svm_c"] = c.svm_c;
  j["svm_gamma"] = c.svm_gamma;
  j["svm_tolerance"] = c.svm_tolerance;
  j["cv_folds"] = c.cv_folds;
  j["grid_search"] = c.grid_search;
  j["min_campaign_reviews"] = c.min_campaign_reviews;
  j["sigma_floor"] = c.sigma_floor;
  j["score_deviation"] = c.score_deviation == ScoreDeviationMode::kMeanAbsolute ? "mean_absolute" : "stddev";
  j["rho_population"] = c.rho_population == RhoPopulation::kCandidates ? "candidates" : "members";
  j["sparse_rule"] = c.sparse_rule == SparseRule::kShortest ? "shortest" : "longest";
  j["seed"] = c.seed;
  return j;
}

// Applies the keys present in `j` on top of `c`. Unknown keys are rejected.
inline void apply_config_json(PipelineConfig& c, const Json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "delta_t_seconds") c.delta_t = v.get<Duration>();
      else if (key == "beta_thre") c.beta_thre = v.get<double>();
      else if (key == "week_len_seconds") c.week_len = v.get<Duration>();
      else if (key == "alert_window_seconds") c.alert_window = v.get<Duration>();
      else if (key == "alert_threshold") c.alert_threshold = v.get<int>();
      else if (key == "elite_rho_cutoff") c.elite_rho_cutoff = v.get<double>();
      else if (key == "svm_c") c.svm_c = v.get<double>();
      else if (key == "svm_gamma") c.svm_gamma = v.get<double>();
      else if (key == "svm_tolerance") c.svm_tolerance = v.get<double>();
      else if (key == "cv_folds") c.cv_folds = v.get<int>();
      else if (key == "grid_search") c.grid_search = v.get<bool>();
      else if (key == "min_campaign_reviews") c.min_campaign_reviews = v.get<int>();
      else if (key == "sigma_floor") c.sigma_floor = v.get<double>();
      else if (key == "score_deviation") {
        const auto m = v.get<std::string>();
        if (m == "mean_absolute") c.score_deviation = ScoreDeviationMode::kMeanAbsolute;
        else if (m == "stddev") c.score_deviation = ScoreDeviationMode::kStdDev;
        else throw ValidationError("score_deviation must be mean_absolute or stddev");
      } else if (key == "rho_population") {
        const auto m = v.get<std::string>();
        if (m == "candidates") c.rho_population = RhoPopulation::kCandidates;
        else if (m == "members") c.rho_population = RhoPopulation::kMembers;
        else throw ValidationError("rho_population must be candidates or members");
      } else if (key == "sparse_rule") {
        const auto m = v.get<std::string>();
        if (m == "shortest") c.sparse_rule = SparseRule::kShortest;
        else if (m == "longest") c.sparse_rule = SparseRule::kLongest;
        else throw ValidationError("sparse_rule must be shortest or longest");
      } else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "workers") c.workers = v.get<unsigned>();
      else throw ValidationError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
}

}  // namespace sybilwatch
