#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <string>
#include <vector>

#include "sybilwatch/io.hpp"
#include "sybilwatch/pipeline.hpp"

namespace sybilwatch {

// Exact text form for doubles that are read back by later phases.
inline std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Phase artifacts under one working directory. Each phase reads only what
// earlier phases wrote plus the dataset.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  bool has(const std::string& name) const { return std::filesystem::exists(path(name)); }
  void ensure() const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  }

  // graph: edges.csv
  void save_graph(const PipelineState& s, const ReviewDataset& ds) const {
    std::ostringstream out;
    out << "u,v,weight\n";
    for (const Edge& e : s.graph->edges())
      out << csv::escape(ds.user_id(e.u)) << ',' << csv::escape(ds.user_id(e.v)) << ',' << format17(e.weight) << '\n';
    write("edges.csv", out.str());
  }

  void load_graph(PipelineState& s, const ReviewDataset& ds) const {
    require_file("edges.csv", "graph");
    std::vector<Edge> edges;
    std::istringstream in(read("edges.csv"));
    csv::for_each_record(in, "u,v,weight", [&](std::size_t line, const std::vector<std::string>& f) {
      if (f.size() != 3) throw ValidationError("edges.csv line " + std::to_string(line) + ": expected 3 columns");
      auto u = ds.find_user(f[0]);
      auto v = ds.find_user(f[1]);
      if (!u || !v) throw ValidationError("edges.csv line " + std::to_string(line) + ": unknown user");
      edges.push_back({std::min(*u, *v), std::max(*u, *v), csv::parse_double(f[2], line, "weight")});
    });
    s.graph = CollusionGraph(ds.user_count(), std::move(edges));
  }

  // cluster: communities.csv lists multi-member communities only.
  void save_cluster(const PipelineState& s, const ReviewDataset& ds) const {
    std::ostringstream out;
    out << "community_id,user_id\n";
    for (CommunityId c = 0; c < s.community_count; ++c) {
      for (UserIndex u : s.partition->communities[c]) out << c << ',' << csv::escape(ds.user_id(u)) << '\n';
    }
    write("communities.csv", out.str());
    Json j;
    j["community_count"] = s.community_count;
    j["modularity_trace"] = s.modularity_trace;
    write("modularity.json", j.dump(2) + "\n");
  }

  void load_cluster(PipelineState& s, const ReviewDataset& ds) const {
    require_file("communities.csv", "cluster");
    require_file("modularity.json", "cluster");
    constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> raw(ds.user_count(), kNone);
    std::istringstream in(read("communities.csv"));
    std::uint32_t max_id = 0;
    bool any = false;
    csv::for_each_record(in, "community_id,user_id", [&](std::size_t line, const std::vector<std::string>& f) {
      if (f.size() != 2) throw ValidationError("communities.csv line " + std::to_string(line) + ": expected 2 columns");
      auto u = ds.find_user(f[1]);
      if (!u) throw ValidationError("communities.csv line " + std::to_string(line) + ": unknown user " + f[1]);
      raw[*u] = csv::parse_number<std::uint32_t>(f[0], line, "community_id");
      max_id = std::max(max_id, raw[*u]);
      any = true;
    });
    std::uint32_t next = any ? max_id + 1 : 0;
    for (auto& r : raw) {
      if (r == kNone) r = next++;
    }
    Partition p;
    p.assignment = raw;
    p.communities.resize(next);
    for (UserIndex u = 0; u < raw.size(); ++u) p.communities[raw[u]].push_back(u);
    const Json j = parse_json_text(read("modularity.json"), "modularity.json");
    s.community_count = j.at("community_count").get<std::size_t>();
    s.modularity_trace = j.at("modularity_trace").get<std::vector<double>>();
    s.partition = std::move(p);
  }

  // features: features.csv
  void save_features(const PipelineState& s) const {
    std::ostringstream out;
    out << "community_id";
    for (const char* name : kFeatureNames) out << ',' << name;
    out << '\n';
    for (CommunityId c = 0; c < s.features->size(); ++c) {
      out << c;
      for (double v : (*s.features)[c].values()) out << ',' << format17(v);
      out << '\n';
    }
    write("features.csv", out.str());
  }

  void load_features(PipelineState& s) const {
    require_file("features.csv", "features");
    std::string header = "community_id";
    for (const char* name : kFeatureNames) header += std::string(",") + name;
    std::vector<FeatureVector> out;
    std::istringstream in(read("features.csv"));
    csv::for_each_record(in, header, [&](std::size_t line, const std::vector<std::string>& f) {
      if (f.size() != kFeatureCount + 1)
        throw ValidationError("features.csv line " + std::to_string(line) + ": expected 9 columns");
      if (csv::parse_number<std::uint32_t>(f[0], line, "community_id") != out.size())
        throw ValidationError("features.csv line " + std::to_string(line) + ": community ids out of order");
      std::vector<double> v;
      for (std::size_t k = 1; k < f.size(); ++k) v.push_back(csv::parse_double(f[k], line, "feature"));
      out.push_back(FeatureVector::from_values(v));
    });
    s.features = std::move(out);
  }

  // train: model.json
  void save_model(const PipelineState& s) const {
    const TrainedModel& m = *s.model;
    Json j;
    j["c"] = m.c;
    j["gamma"] = m.gamma;
    j["bias"] = m.bias;
    j["mean"] = m.scaler.mean;
    j["stddev"] = m.scaler.stddev;
    j["support"] = m.support;
    j["coef"] = m.coef;
    j["cv"] = metrics_json(*s.cv_metrics);
    Json labels = Json::object();
    for (const auto& [c, l] : s.labels) labels[std::to_string(c)] = label_name(l);
    j["labels"] = labels;
    j["labels_derived"] = s.labels_derived;
    write("model.json", j.dump(1) + "\n");
  }

  void load_model(PipelineState& s) const {
    require_file("model.json", "train");
    const Json j = parse_json_text(read("model.json"), "model.json");
    try {
      TrainedModel m;
      m.c = j.at("c").get<double>();
      m.gamma = j.at("gamma").get<double>();
      m.bias = j.at("bias").get<double>();
      m.scaler.mean = j.at("mean").get<std::vector<double>>();
      m.scaler.stddev = j.at("stddev").get<std::vector<double>>();
      m.support = j.at("support").get<std::vector<std::vector<double>>>();
      m.coef = j.at("coef").get<std::vector<double>>();
      EvalMetrics cv;
      const Json& jc = j.at("cv");
      cv.precision = jc.at("precision").get<double>();
      cv.recall = jc.at("recall").get<double>();
      cv.f1 = jc.at("f1").get<double>();
      if (!jc.at("auc").is_null()) cv.auc = jc.at("auc").get<double>();
      for (const auto& f : jc.at("folds")) {
        FoldMetrics fm{f.at("precision").get<double>(), f.at("recall").get<double>(), f.at("f1").get<double>(), {}};
        if (!f.at("auc").is_null()) fm.auc = f.at("auc").get<double>();
        cv.folds.push_back(fm);
      }
      s.labels.clear();
      for (const auto& [k, v] : j.at("labels").items())
        s.labels[static_cast<CommunityId>(std::stoul(k))] = parse_label(v.get<std::string>());
      s.labels_derived = j.at("labels_derived").get<bool>();
      s.model = std::move(m);
      s.cv_metrics = std::move(cv);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("model.json: ") + e.what());
    }
  }

  // classify: classified.csv
  void save_classified(const PipelineState& s) const {
    std::ostringstream out;
    out << "community_id,label,score\n";
    for (CommunityId c = 0; c < s.predictions->size(); ++c)
      out << c << ',' << label_name((*s.predictions)[c].first) << ',' << format17((*s.predictions)[c].second) << '\n';
    write("classified.csv", out.str());
  }

  void load_classified(PipelineState& s) const {
    require_file("classified.csv", "classify");
    std::vector<std::pair<Label, double>> out;
    std::istringstream in(read("classified.csv"));
    csv::for_each_record(in, "community_id,label,score", [&](std::size_t line, const std::vector<std::string>& f) {
      if (f.size() != 3) throw ValidationError("classified.csv line " + std::to_string(line) + ": expected 3 columns");
      out.emplace_back(parse_label(f[1]), csv::parse_double(f[2], line, "score"));
    });
    s.predictions = std::move(out);
  }

  // windows: campaigns.csv
  void save_campaigns(const PipelineState& s, const ReviewDataset& ds) const {
    std::ostringstream out;
    out << kCampaignsHeader << '\n';
    for (const Campaign& c : s.campaigns->campaigns) {
      out << c.community << ',' << csv::escape(ds.store(c.store).store_id) << ',' << c.start_ts << ',' << c.end_ts
          << ',' << c.start_week << ',' << c.end_week << ',' << c.review_count << '\n';
    }
    write("campaigns.csv", out.str());
  }

  void load_campaigns(PipelineState& s, const ReviewDataset& ds) const {
    require_file("campaigns.csv", "windows");
    CampaignExtraction ex;
    std::istringstream in(read("campaigns.csv"));
    csv::for_each_record(in, kCampaignsHeader, [&](std::size_t line, const std::vector<std::string>& f) {
      if (f.size() != 7) throw ValidationError("campaigns.csv line " + std::to_string(line) + ": expected 7 columns");
      auto store = ds.find_store(f[1]);
      if (!store) throw ValidationError("campaigns.csv line " + std::to_string(line) + ": unknown store " + f[1]);
      Campaign c;
      c.community = csv::parse_number<CommunityId>(f[0], line, "community");
      c.store = *store;
      c.start_ts = csv::parse_number<Timestamp>(f[2], line, "start_ts");
      c.end_ts = csv::parse_number<Timestamp>(f[3], line, "end_ts");
      c.start_week = csv::parse_number<std::size_t>(f[4], line, "start_week");
      c.end_week = csv::parse_number<std::size_t>(f[5], line, "end_week");
      c.review_count = csv::parse_number<std::size_t>(f[6], line, "review_count");
      ex.campaigns.push_back(c);
    });
    s.campaigns = std::move(ex);
  }

  // score: elite_scores.json (exact), elite.csv and annotations.csv
  void save_elite(const PipelineState& s, const ReviewDataset& ds) const {
    const EliteScoring& e = *s.elite;
    Json j;
    Json elite = Json::array();
    for (const EliteScore& sc : e.elite) {
      Json parts = Json::array();
      for (const auto& p : sc.communities)
        parts.push_back({{"community", p.community}, {"n", p.weighted_count}, {"rho", p.rho}});
      elite.push_back({{"user_id", ds.user_id(sc.user)}, {"f", sc.sybilness}, {"communities", parts}});
    }
    j["elite"] = elite;
    j["skipped_communities"] = e.skipped_communities;
    Json windows = Json::array();
    for (std::size_t i = 0; i < e.windows.size(); ++i) {
      Json ws = Json::array();
      for (const CampaignWindow& w : e.windows[i].windows) {
        ws.push_back({{"store_id", ds.store(w.store).store_id},
                      {"start_ts", w.start_ts},
                      {"end_ts", w.end_ts},
                      {"count", w.count},
                      {"weight", w.weight}});
      }
      windows.push_back({{"community", e.windows[i].community},
                         {"mu", e.stats[i].mean},
                         {"sigma", e.stats[i].stddev},
                         {"windows", ws}});
    }
    j["windows"] = windows;
    write("elite_scores.json", j.dump(1) + "\n");

    std::ostringstream ec;
    ec << "rank,user_id,f,top_community,top_rho\n";
    for (std::size_t i = 0; i < e.elite.size(); ++i) {
      const EliteScore& sc = e.elite[i];
      const CommunityParticipation* top = nullptr;
      for (const auto& p : sc.communities) {
        if (!top || p.rho > top->rho) top = &p;
      }
      ec << i + 1 << ',' << csv::escape(ds.user_id(sc.user)) << ',' << format17(sc.sybilness) << ','
         << (top ? std::to_string(top->community) : "") << ',' << (top ? format17(top->rho) : "") << '\n';
    }
    write("elite.csv", ec.str());

    std::ostringstream an;
    an << "review_id,score\n";
    for (const ReviewAnnotation& a : e.annotations)
      an << csv::escape(ds.review(a.review).review_id) << ',' << format17(a.score) << '\n';
    write("annotations.csv", an.str());
  }

  void load_elite(PipelineState& s, const ReviewDataset& ds) const {
    require_file("elite_scores.json", "score");
    require_file("annotations.csv", "score");
    EliteScoring e;
    const Json j = parse_json_text(read("elite_scores.json"), "elite_scores.json");
    try {
      for (const auto& item : j.at("elite")) {
        auto u = ds.find_user(item.at("user_id").get<std::string>());
        if (!u) throw ValidationError("elite_scores.json: unknown user " + item.at("user_id").get<std::string>());
        EliteScore sc;
        sc.user = *u;
        sc.sybilness = item.at("f").get<double>();
        sc.is_elite = true;
        for (const auto& p : item.at("communities"))
          sc.communities.push_back({p.at("community").get<CommunityId>(), p.at("n").get<double>(), p.at("rho").get<double>()});
        e.elite.push_back(std::move(sc));
      }
      e.skipped_communities = j.at("skipped_communities").get<std::vector<CommunityId>>();
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(std::string("elite_scores.json: ") + ex.what());
    }
    std::unordered_map<std::string, ReviewIndex> review_index;
    for (ReviewIndex r = 0; r < ds.review_count(); ++r) review_index.emplace(ds.review(r).review_id, r);
    std::istringstream in(read("annotations.csv"));
    csv::for_each_record(in, "review_id,score", [&](std::size_t line, const std::vector<std::string>& f) {
      if (f.size() != 2) throw ValidationError("annotations.csv line " + std::to_string(line) + ": expected 2 columns");
      auto it = review_index.find(f[0]);
      if (it == review_index.end())
        throw ValidationError("annotations.csv line " + std::to_string(line) + ": unknown review " + f[0]);
      e.annotations.push_back({it->second, csv::parse_double(f[1], line, "score")});
    });
    s.elite = std::move(e);
  }

  // alert: alerts.json (exact) and alerts.csv
  void save_alerts(const PipelineState& s, const ReviewDataset& ds) const {
    Json arr = Json::array();
    std::ostringstream out;
    out << "store_id,start_ts,end_ts,fire_ts,count,trigger_days,users\n";
    for (const Alert& a : *s.alerts) {
      std::vector<std::string> users;
      for (UserIndex u : a.users) users.push_back(ds.user_id(u));
      arr.push_back(alert_json(a, ds));
      std::string joined;
      for (const auto& u : users) joined += (joined.empty() ? "" : ";") + u;
      out << csv::escape(ds.store(a.store).store_id) << ',' << a.start_ts << ',' << a.end_ts << ',' << a.fire_ts << ','
          << a.count << ',' << a.trigger_days << ',' << csv::escape(joined) << '\n';
    }
    write("alerts.json", arr.dump(1) + "\n");
    write("alerts.csv", out.str());
  }

  void load_alerts(PipelineState& s, const ReviewDataset& ds) const {
    require_file("alerts.json", "alert");
    const Json arr = parse_json_text(read("alerts.json"), "alerts.json");
    std::vector<Alert> out;
    try {
      for (const auto& j : arr) {
        Alert a;
        auto store = ds.find_store(j.at("store_id").get<std::string>());
        if (!store) throw ValidationError("alerts.json: unknown store");
        a.store = *store;
        a.start_ts = j.at("start_ts").get<Timestamp>();
        a.end_ts = j.at("end_ts").get<Timestamp>();
        a.fire_ts = j.at("fire_ts").get<Timestamp>();
        a.count = j.at("count").get<std::size_t>();
        a.trigger_days = j.at("trigger_days").get<std::size_t>();
        for (const auto& id : j.at("users")) {
          auto u = ds.find_user(id.get<std::string>());
          if (!u) throw ValidationError("alerts.json: unknown user");
          a.users.push_back(*u);
        }
        out.push_back(std::move(a));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("alerts.json: ") + e.what());
    }
    s.alerts = std::move(out);
  }

  void save_evaluation(const PipelineState& s) const { write("evaluation.json", s.evaluation->dump(2) + "\n"); }


  static constexpr std::array<const char*, 9> kPhases = {"graph",   "cluster", "features", "train",   "classify",
                                                         "windows", "score",   "alert",    "evaluate"};

  // Loads the artifacts of every phase before `phase` that exist on disk.
  void load_before(PipelineState& s, const ReviewDataset& ds, std::string_view phase) const {
    for (const char* p : kPhases) {
      if (phase == p) break;
      const std::string name = p;
      if (name == "graph" && has("edges.csv")) load_graph(s, ds);
      else if (name == "cluster" && has("communities.csv")) load_cluster(s, ds);
      else if (name == "features" && has("features.csv")) load_features(s);
      else if (name == "train" && has("model.json")) load_model(s);
      else if (name == "classify" && has("classified.csv")) load_classified(s);
      else if (name == "windows" && has("campaigns.csv")) load_campaigns(s, ds);
      else if (name == "score" && has("elite_scores.json")) load_elite(s, ds);
      else if (name == "alert" && has("alerts.json")) load_alerts(s, ds);
    }
  }

  static Json alert_json(const Alert& a, const ReviewDataset& ds) {
    Json users = Json::array();
    for (UserIndex u : a.users) users.push_back(ds.user_id(u));
    return {{"store_id", ds.store(a.store).store_id},
            {"start_ts", a.start_ts},
            {"end_ts", a.end_ts},
            {"fire_ts", a.fire_ts},
            {"count", a.count},
            {"trigger_days", a.trigger_days},
            {"users", users}};
  }

  std::string read(const std::string& name) const { return read_file(path(name).string()); }
  void write(const std::string& name, std::string_view content) const { write_file(path(name).string(), content); }

  static constexpr std::string_view kCampaignsHeader =
      "community_id,store_id,start_ts,end_ts,start_week,end_week,review_count";

 private:
  void require_file(const std::string& name, const char* phase) const {
    if (!has(name))
      throw PrerequisiteError("missing " + path(name).string() + "; run '" + std::string(phase) + "' first");
  }

  std::filesystem::path dir_;
};

// The consolidated report. Keys are emitted in a fixed order and floats are
// rounded to 9 significant digits; phases that have not run appear as null.
inline Json build_report(const PipelineState& s, const ReviewDataset& ds, const Json& inputs) {
  Json r;
  r["manifest"] = {{"tool", "sybilwatch"},
                   {"version", kVersion},
                   {"config", config_to_json(s.config)},
                   {"inputs", inputs}};
  r["dataset"] = {{"reviews", ds.review_count()},
                  {"users", ds.user_count()},
                  {"stores", ds.store_count()},
                  {"t_min", ds.t_min()},
                  {"t_max", ds.t_max()}};
  if (s.graph) {
    r["graph"] = {{"nodes", s.graph->node_count()},
                  {"edges", s.graph->edge_count()},
                  {"total_weight", round9(s.graph->total_weight())}};
  } else {
    r["graph"] = nullptr;
  }

  if (s.partition) {
    Json comms = Json::array();
    for (CommunityId c = 0; c < s.community_count; ++c) {
      Json members = Json::array();
      std::vector<std::string> ids;
      for (UserIndex u : s.partition->communities[c]) ids.push_back(ds.user_id(u));
      std::sort(ids.begin(), ids.end());
      for (auto& id : ids) members.push_back(id);
      Json item;
      item["id"] = c;
      item["size"] = ids.size();
      item["members"] = members;
      if (s.features) {
        Json f;
        const auto v = (*s.features)[c].values();
        for (std::size_t k = 0; k < kFeatureCount; ++k) f[kFeatureNames[k]] = round9(v[k]);
        item["features"] = f;
      } else {
        item["features"] = nullptr;
      }
      auto lab = s.labels.find(c);
      item["label"] = lab == s.labels.end() ? Json(nullptr) : Json(label_name(lab->second));
      if (s.predictions) {
        item["prediction"] = label_name((*s.predictions)[c].first);
        item["score"] = round9((*s.predictions)[c].second);
      } else {
        item["prediction"] = nullptr;
        item["score"] = nullptr;
      }
      comms.push_back(item);
    }
    r["communities"] = comms;
    Json trace = Json::array();
    for (double q : s.modularity_trace) trace.push_back(round9(q));
    r["modularity_trace"] = trace;
  } else {
    r["communities"] = nullptr;
    r["modularity_trace"] = nullptr;
  }

  if (s.model) {
    r["classifier"] = {{"C", round9(s.model->c)},
                       {"gamma", round9(s.model->gamma)},
                       {"labels_source", s.labels_derived ? "ground_truth" : "labels_file"},
                       {"labeled_communities", s.labels.size()},
                       {"support_vectors", s.model->support.size()},
                       {"cv", metrics_json(*s.cv_metrics)}};
  } else {
    r["classifier"] = nullptr;
  }

  if (s.campaigns) {
    Json camps = Json::array();
    for (const Campaign& c : s.campaigns->campaigns)
      camps.push_back({{"C", c.community}, {"S", ds.store(c.store).store_id}, {"T_s", c.start_ts}, {"T_e", c.end_ts}});
    r["campaigns"] = camps;
  } else {
    r["campaigns"] = nullptr;
  }

  if (s.elite) {
    Json elite = Json::array();
    for (const EliteScore& e : s.elite->elite) {
      Json rho = Json::object();
      for (const auto& p : e.communities) rho[std::to_string(p.community)] = round9(p.rho);
      elite.push_back({{"user_id", ds.user_id(e.user)}, {"f", round9(e.sybilness)}, {"rho", rho}});
    }
    r["elite"] = elite;
    Json ann = Json::array();
    for (const ReviewAnnotation& a : s.elite->annotations)
      ann.push_back({{"review_id", ds.review(a.review).review_id}, {"score", round9(a.score)}});
    r["annotations"] = ann;
  } else {
    r["elite"] = nullptr;
    r["annotations"] = nullptr;
  }

  if (s.alerts) {
    Json alerts = Json::array();
    for (const Alert& a : *s.alerts) alerts.push_back(Workspace::alert_json(a, ds));
    r["alerts"] = alerts;
  } else {
    r["alerts"] = nullptr;
  }

  r["evaluation"] = s.evaluation ? *s.evaluation : Json(nullptr);
  return r;
}

}  // namespace sybilwatch
