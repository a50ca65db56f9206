// sybilwatch command line: synthetic data, phase-by-phase runs and the
// end-to-end pipeline over one working directory.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sybilwatch/artifacts.hpp"
#include "sybilwatch/synthgen.hpp"

namespace fs = std::filesystem;
using namespace sybilwatch;

namespace {

struct Overrides {
  std::optional<double> delta_t_days;
  std::optional<double> beta;
  std::optional<double> week_days;
  std::optional<double> alert_window_days;
  std::optional<int> alert_threshold;
  std::optional<double> rho_cutoff;
  std::optional<double> svm_c;
  std::optional<double> svm_gamma;
  std::optional<double> svm_tolerance;
  std::optional<int> cv_folds;
  bool grid_search = false;
  std::optional<int> min_campaign_reviews;
  std::optional<double> sigma_floor;
  std::optional<std::string> score_deviation;
  std::optional<std::string> rho_population;
  std::optional<std::string> sparse_rule;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

struct Options {
  std::string workdir = "sybilwatch-run";
  std::string config_path;
  std::string reviews_path;
  std::string stores_path;
  std::string labels_path;
  std::string truth_path;
  std::string out_path;
  Overrides ov;

  // synth
  std::optional<std::size_t> target_reviews;
  std::optional<std::size_t> benign_users;
  std::optional<std::size_t> stores;
  std::optional<std::size_t> communities;
  std::optional<std::size_t> elite_users;
  std::optional<std::int64_t> horizon_days;
};

Duration days_to_seconds(double d) {
  if (!(d > 0)) throw ValidationError("durations must be positive");
  return static_cast<Duration>(std::llround(d * static_cast<double>(kSecondsPerDay)));
}

PipelineConfig resolve_config(const Options& o) {
  PipelineConfig c;
  if (!o.config_path.empty()) apply_config_json(c, parse_json_text(read_file(o.config_path), o.config_path));
  const Overrides& v = o.ov;
  if (v.delta_t_days) c.delta_t = days_to_seconds(*v.delta_t_days);
  if (v.beta) c.beta_thre = *v.beta;
  if (v.week_days) c.week_len = days_to_seconds(*v.week_days);
  if (v.alert_window_days) c.alert_window = days_to_seconds(*v.alert_window_days);
  if (v.alert_threshold) c.alert_threshold = *v.alert_threshold;
  if (v.rho_cutoff) c.elite_rho_cutoff = *v.rho_cutoff;
  if (v.svm_c) c.svm_c = *v.svm_c;
  if (v.svm_gamma) c.svm_gamma = *v.svm_gamma;
  if (v.svm_tolerance) c.svm_tolerance = *v.svm_tolerance;
  if (v.cv_folds) c.cv_folds = *v.cv_folds;
  if (v.grid_search) c.grid_search = true;
  if (v.min_campaign_reviews) c.min_campaign_reviews = *v.min_campaign_reviews;
  if (v.sigma_floor) c.sigma_floor = *v.sigma_floor;
  Json named = Json::object();
  if (v.score_deviation) named["score_deviation"] = *v.score_deviation;
  if (v.rho_population) named["rho_population"] = *v.rho_population;
  if (v.sparse_rule) named["sparse_rule"] = *v.sparse_rule;
  apply_config_json(c, named);
  if (v.seed) c.seed = *v.seed;
  if (v.workers) c.workers = *v.workers;
  c.validate();
  return c;
}

std::string input_path(const Options& o, const std::string& given, const char* name) {
  return given.empty() ? (fs::path(o.workdir) / name).string() : given;
}

struct LoadedInputs {
  ReviewDataset ds;
  Json digests;
};

LoadedInputs load_inputs(const Options& o) {
  const std::string reviews = input_path(o, o.reviews_path, "reviews.csv");
  const std::string stores = input_path(o, o.stores_path, "stores.csv");
  for (const auto& p : {reviews, stores}) {
    if (!fs::exists(p)) throw PrerequisiteError("missing " + p + "; pass --reviews/--stores or run 'synth' first");
  }
  const std::string review_text = read_file(reviews);
  const std::string store_text = read_file(stores);
  std::istringstream rin(review_text), sin(store_text);
  auto parsed_reviews = parse_reviews(rin, format_for_path(reviews));
  auto parsed_stores = parse_stores(sin);
  LoadedInputs in{ReviewDataset::build(std::move(parsed_reviews), std::move(parsed_stores)), Json::object()};
  in.digests["reviews"] = digest(review_text);
  in.digests["stores"] = digest(store_text);
  return in;
}

std::optional<GroundTruth> load_truth(const Options& o, Json& digests) {
  if (o.truth_path.empty()) return std::nullopt;
  const std::string text = read_file(o.truth_path);
  digests["ground_truth"] = digest(text);
  return ground_truth_from_json(parse_json_text(text, o.truth_path));
}

std::optional<std::map<CommunityId, Label>> load_labels(const Options& o, Json& digests) {
  if (o.labels_path.empty()) return std::nullopt;
  const std::string text = read_file(o.labels_path);
  digests["labels"] = digest(text);
  std::istringstream in(text);
  return parse_labels(in);
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& phase_files() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> files = {
      {"graph", {"edges.csv"}},
      {"cluster", {"communities.csv", "modularity.json"}},
      {"features", {"features.csv"}},
      {"train", {"model.json"}},
      {"classify", {"classified.csv"}},
      {"windows", {"campaigns.csv"}},
      {"score", {"elite_scores.json", "elite.csv", "annotations.csv"}},
      {"alert", {"alerts.json", "alerts.csv"}},
      {"evaluate", {"evaluation.json"}},
  };
  return files;
}

// Removes the artifacts of every phase after `phase` so a rerun never mixes
// stale downstream results into the report.
void invalidate_after(const Workspace& ws, const std::string& phase) {
  bool after = false;
  for (const auto& [name, files] : phase_files()) {
    if (after) {
      for (const auto& f : files) fs::remove(ws.path(f));
    }
    if (name == phase) after = true;
  }
}

void write_outputs(const Workspace& ws, const PipelineState& s, const ReviewDataset& ds, const Json& digests) {
  ws.write("report.json", build_report(s, ds, digests).dump(2) + "\n");
  Json m;
  m["tool"] = "sybilwatch";
  m["version"] = kVersion;
  m["config"] = config_to_json(s.config);
  m["workers"] = resolve_workers(s.config.workers);
  m["inputs"] = digests;
  Json t = Json::object();
  for (const auto& [name, secs] : s.timings) t[name] = secs;
  m["timings_seconds"] = t;
  ws.write("run_manifest.json", m.dump(2) + "\n");
}

void save_phase(const Workspace& ws, const std::string& phase, const PipelineState& s, const ReviewDataset& ds) {
  if (phase == "graph") ws.save_graph(s, ds);
  else if (phase == "cluster") ws.save_cluster(s, ds);
  else if (phase == "features") ws.save_features(s);
  else if (phase == "train") ws.save_model(s);
  else if (phase == "classify") ws.save_classified(s);
  else if (phase == "windows") ws.save_campaigns(s, ds);
  else if (phase == "score") ws.save_elite(s, ds);
  else if (phase == "alert") ws.save_alerts(s, ds);
  else if (phase == "evaluate") ws.save_evaluation(s);
}

void attach_labels(PipelineState& s, const ReviewDataset& ds, const std::optional<std::map<CommunityId, Label>>& labels,
                   const std::optional<GroundTruth>& truth) {
  if (labels) {
    s.labels = *labels;
    s.labels_derived = false;
  } else if (truth) {
    if (!s.partition) throw PrerequisiteError("missing communities; run 'cluster' first");
    s.labels = derive_labels(ds, *s.partition, *truth);
    s.labels_derived = true;
  } else {
    throw PrerequisiteError("missing community labels; pass --labels or --ground-truth");
  }
}

int run_phase(const std::string& phase, const Options& o) {
  const PipelineConfig cfg = resolve_config(o);
  LoadedInputs in = load_inputs(o);
  const ReviewDataset& ds = in.ds;
  const auto labels = load_labels(o, in.digests);
  const auto truth = load_truth(o, in.digests);
  Workspace ws(o.workdir);
  ws.ensure();

  PipelineState s;
  s.config = cfg;
  if (phase == "pipeline") {
    for (const auto& [name, files] : phase_files()) {
      for (const auto& f : files) fs::remove(ws.path(f));
    }
    run_graph(s, ds);
    ws.save_graph(s, ds);
    run_cluster(s);
    ws.save_cluster(s, ds);
    run_features(s, ds);
    ws.save_features(s);
    attach_labels(s, ds, labels, truth);
    run_train(s);
    ws.save_model(s);
    run_classify(s);
    ws.save_classified(s);
    run_windows(s, ds);
    ws.save_campaigns(s, ds);
    run_score(s, ds);
    ws.save_elite(s, ds);
    run_alert(s, ds);
    ws.save_alerts(s, ds);
    if (truth) {
      run_evaluate(s, ds, *truth);
      ws.save_evaluation(s);
    }
  } else {
    ws.load_before(s, ds, phase);
    if (phase == "graph") run_graph(s, ds);
    else if (phase == "cluster") run_cluster(s);
    else if (phase == "features") run_features(s, ds);
    else if (phase == "train") {
      if (!s.features) throw PrerequisiteError("missing community features; run 'features' first");
      attach_labels(s, ds, labels, truth);
      run_train(s);
    } else if (phase == "classify") run_classify(s);
    else if (phase == "windows") run_windows(s, ds);
    else if (phase == "score") run_score(s, ds);
    else if (phase == "alert") run_alert(s, ds);
    else if (phase == "evaluate") {
      if (!truth) throw PrerequisiteError("missing ground truth; pass --ground-truth");
      run_evaluate(s, ds, *truth);
    }
    invalidate_after(ws, phase);
    save_phase(ws, phase, s, ds);
  }
  write_outputs(ws, s, ds, in.digests);
  std::printf("%s: wrote %s\n", phase.c_str(), ws.path("report.json").string().c_str());
  return 0;
}

int run_synth(const Options& o) {
  SynthParams p = o.target_reviews ? scaled_params(*o.target_reviews) : SynthParams{};
  if (o.ov.seed) p.seed = *o.ov.seed;
  if (o.benign_users) p.n_benign_users = *o.benign_users;
  if (o.stores) p.n_stores = *o.stores;
  if (o.communities) p.n_communities = *o.communities;
  if (o.elite_users) p.n_elite_users = *o.elite_users;
  if (o.horizon_days) p.horizon_days = *o.horizon_days;
  const SynthOutput out = generate(p);
  Workspace ws(o.workdir);
  ws.ensure();
  std::ostringstream reviews, stores;
  write_reviews_csv(reviews, out.reviews);
  write_stores_csv(stores, out.stores);
  ws.write("reviews.csv", reviews.str());
  ws.write("stores.csv", stores.str());
  ws.write("ground_truth.json", ground_truth_to_json(out.truth).dump(1) + "\n");
  std::printf("synth: %zu reviews, %zu stores, %zu planted campaigns -> %s\n", out.reviews.size(), out.stores.size(),
              out.truth.campaigns.size(), o.workdir.c_str());
  return 0;
}

// Majority-vote community labels from a ground-truth file.
int run_label(const Options& o) {
  if (o.truth_path.empty()) throw ValidationError("label needs --ground-truth");
  LoadedInputs in = load_inputs(o);
  Json digests;
  const auto truth = load_truth(o, digests);
  Workspace ws(o.workdir);
  PipelineState s;
  ws.load_cluster(s, in.ds);
  const auto labels = derive_labels(in.ds, *s.partition, *truth);
  std::ostringstream out;
  write_labels_csv(out, labels);
  const std::string dest = o.out_path.empty() ? ws.path("labels.csv").string() : o.out_path;
  write_file(dest, out.str());
  std::printf("label: %zu communities -> %s\n", labels.size(), dest.c_str());
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-w,--workdir", o.workdir, "Directory for inputs and artifacts");
  cmd->add_option("--seed", o.ov.seed, "Random seed");
  cmd->add_option("--workers", o.ov.workers, "Worker threads (0 = all cores)");
}

void add_pipeline_options(CLI::App* cmd, Options& o) {
  add_common(cmd, o);
  cmd->add_option("-c,--config", o.config_path, "JSON config file; flags override its values");
  cmd->add_option("--reviews", o.reviews_path, "Reviews file (.csv or .jsonl); default <workdir>/reviews.csv");
  cmd->add_option("--stores", o.stores_path, "Stores file; default <workdir>/stores.csv");
  cmd->add_option("--labels", o.labels_path, "Community labels CSV");
  cmd->add_option("--ground-truth", o.truth_path, "Ground-truth JSON (labels fallback and evaluation)");
  Overrides& v = o.ov;
  cmd->add_option("--delta-t-days", v.delta_t_days, "Collusion time window in days");
  cmd->add_option("--beta", v.beta, "Similarity threshold for Sybil links");
  cmd->add_option("--week-days", v.week_days, "Bin width for campaign windows in days");
  cmd->add_option("--alert-window-days", v.alert_window_days, "Alert sliding window in days");
  cmd->add_option("--alert-threshold", v.alert_threshold, "Watchlist reviews that raise an alert");
  cmd->add_option("--rho-cutoff", v.rho_cutoff, "Participation rate above which a user is elite");
  cmd->add_option("--svm-c", v.svm_c, "SVM soft-margin C");
  cmd->add_option("--svm-gamma", v.svm_gamma, "RBF kernel gamma");
  cmd->add_option("--svm-tolerance", v.svm_tolerance, "SMO stopping tolerance");
  cmd->add_option("--cv-folds", v.cv_folds, "Cross-validation folds");
  cmd->add_flag("--grid-search", v.grid_search, "Search C and gamma on a log3 grid");
  cmd->add_option("--min-campaign-reviews", v.min_campaign_reviews, "Minimum reviews per community-store pair");
  cmd->add_option("--sigma-floor", v.sigma_floor, "Lower bound on the participation spread");
  cmd->add_option("--score-deviation", v.score_deviation, "mean_absolute or stddev");
  cmd->add_option("--rho-population", v.rho_population, "candidates or members");
  cmd->add_option("--sparse-rule", v.sparse_rule, "shortest or longest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect fake-review Sybil communities, campaigns and elite Sybil accounts"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  add_common(synth, o);
  synth->add_option("--target-reviews", o.target_reviews, "Scale the default world to about this many reviews");
  synth->add_option("--benign-users", o.benign_users);
  synth->add_option("--stores", o.stores);
  synth->add_option("--communities", o.communities);
  synth->add_option("--elite-users", o.elite_users);
  synth->add_option("--horizon-days", o.horizon_days);

  const char* phases[][2] = {
      {"graph", "Build the collusion graph"},
      {"cluster", "Louvain communities"},
      {"features", "Community features"},
      {"train", "Train the community classifier"},
      {"classify", "Label every community"},
      {"windows", "Campaign time windows"},
      {"score", "Rank elite Sybil users"},
      {"alert", "Sliding-window alerts on the elite watchlist"},
      {"evaluate", "Compare against ground truth"},
      {"pipeline", "Run every phase"},
  };
  std::vector<std::pair<std::string, CLI::App*>> phase_cmds;
  for (auto& [name, help] : phases) {
    auto* cmd = app.add_subcommand(name, help);
    add_pipeline_options(cmd, o);
    phase_cmds.emplace_back(name, cmd);
  }
  auto* label = app.add_subcommand("label", "Write labels.csv from ground truth and detected communities");
  add_common(label, o);
  label->add_option("--reviews", o.reviews_path);
  label->add_option("--stores", o.stores_path);
  label->add_option("--ground-truth", o.truth_path)->required();
  label->add_option("-o,--out", o.out_path, "Destination (default <workdir>/labels.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(o);
    if (label->parsed()) return run_label(o);
    for (auto& [name, cmd] : phase_cmds) {
      if (cmd->parsed()) return run_phase(name, o);
    }
  } catch (const PrerequisiteError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 1;
}
