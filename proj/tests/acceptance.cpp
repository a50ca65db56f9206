// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "sybilwatch/pipeline.hpp"

using namespace sybilwatch;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void ac1_similarity_oracle() {
  SynthParams p;
  p.n_benign_users = 170;
  p.n_stores = 40;
  p.n_districts = 4;
  p.n_chains = 4;
  p.n_communities = 3;
  p.n_elite_users = 8;
  p.horizon_days = 180;
  p.seed = 11;
  auto world = generate(p);
  // Keep the first 200 user ids.
  std::set<std::string> ids;
  for (const auto& r : world.reviews) ids.insert(r.user_id);
  std::set<std::string> keep;
  for (const auto& id : ids) {
    if (keep.size() == 200) break;
    keep.insert(id);
  }
  std::vector<Review> reviews;
  for (const auto& r : world.reviews)
    if (keep.contains(r.user_id)) reviews.push_back(r);
  auto ds = ReviewDataset::build(reviews, world.stores);

  const Duration dt = 7 * kSecondsPerDay;
  const auto t0 = Clock::now();
  const auto g = build_graph(ds, dt, 0.0, 4);
  const double built = seconds_since(t0);
  const auto expect = oracle::all_pairs_similarity(reviews, dt);

  bool same = g.edge_count() == expect.size();
  double worst = 0.0;
  for (const Edge& e : g.edges()) {
    auto a = ds.user_id(e.u), b = ds.user_id(e.v);
    if (a > b) std::swap(a, b);
    auto it = expect.find({a, b});
    if (it == expect.end()) {
      same = false;
      continue;
    }
    worst = std::max(worst, std::abs(it->second - e.weight));
  }
  same = same && worst <= 1e-15;
  verdict("AC1", same && built < 30.0,
          fmt("%zu users, %zu edges vs %zu oracle pairs, max |dw|=%.1e, build %.3fs (hardware threads: %u)",
              ds.user_count(), g.edge_count(), expect.size(), worst, built, std::thread::hardware_concurrency()));
}

void ac2_louvain_optimality() {
  std::mt19937_64 rng(2024);
  double worst_gap = 0.0;
  bool monotone = true;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 7;
    auto edges = oracle::random_connected(rng, n);
    CollusionGraph g(n, edges);
    auto lr = louvain(g, 42 + t);
    std::vector<std::uint32_t> comm(lr.partition.assignment.begin(), lr.partition.assignment.end());
    const double q = oracle::modularity(n, edges, comm);
    worst_gap = std::max(worst_gap, oracle::best_modularity(n, edges) - q);
    for (std::size_t i = 1; i < lr.modularity_trace.size(); ++i)
      monotone = monotone && lr.modularity_trace[i] >= lr.modularity_trace[i - 1] - 1e-12;
  }
  verdict("AC2", worst_gap <= 0.05 && monotone,
          fmt("100 graphs, worst gap to optimum %.4f, trace monotone: %s", worst_gap, monotone ? "yes" : "no"));
}

void ac3_feature_oracle() {
  std::mt19937_64 rng(99);
  int checked = 0;
  double worst_entropy = 0.0;
  bool exact = true;
  while (checked < 50) {
    std::vector<Store> stores;
    for (int s = 0; s < 8; ++s) {
      Store st;
      st.store_id = "s" + std::to_string(s);
      st.district = "d" + std::to_string(rng() % 4);
      if (rng() % 2) st.chain_id = "c" + std::to_string(rng() % 3);
      stores.push_back(st);
    }
    std::vector<Review> reviews;
    for (int i = 0; i < 90; ++i) {
      const int star = rng() % 3 == 0 ? 1 + static_cast<int>(rng() % 5) : 5;
      reviews.push_back({"r" + std::to_string(i), "u" + std::to_string(rng() % 14), "s" + std::to_string(rng() % 8),
                         1420070400 + static_cast<Timestamp>(rng() % 40) * kSecondsPerDay, star});
    }
    auto ds = ReviewDataset::build(reviews, stores);
    auto g = build_graph(ds, 7 * kSecondsPerDay, 0.0, 1);
    std::vector<UserIndex> members;
    for (UserIndex u = 0; u < ds.user_count(); ++u)
      if (rng() % 2) members.push_back(u);
    if (members.size() < 2) continue;
    ++checked;
    auto f = extract_features(members, ds, g, store_mean_stars(ds));

    std::set<UserIndex> in(members.begin(), members.end());
    std::map<std::string, int> chain, district;
    std::map<std::pair<UserIndex, std::string>, int> dup;
    for (const Review& r : reviews) {
      const UserIndex u = *ds.find_user(r.user_id);
      if (!in.contains(u)) continue;
      const Store& s = ds.store(*ds.find_store(r.store_id));
      ++chain[s.chain_id ? "c:" + *s.chain_id : "s:" + s.store_id];
      ++district[s.district];
      ++dup[{u, r.store_id}];
    }
    worst_entropy = std::max({worst_entropy, std::abs(f.entropy_chain - oracle::entropy(chain)),
                              std::abs(f.entropy_district - oracle::entropy(district))});
    int maxdup = 0;
    for (auto& [k, c] : dup) maxdup = std::max(maxdup, c);
    exact = exact && f.max_duplication == maxdup &&
            std::abs(f.global_clustering_coeff - oracle::clustering(g, members)) <= 1e-12;
  }
  verdict("AC3", exact && worst_entropy <= 1e-12,
          fmt("50 communities, max entropy error %.1e, clustering and duplication exact: %s", worst_entropy,
              exact ? "yes" : "no"));
}

bool ac5_fuzz(std::string& detail) {
  std::mt19937_64 rng(5);
  std::size_t idempotent = 0, max_kept = 0;
  const std::size_t n = 10000;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::size_t> c(1 + rng() % 40);
    for (auto& v : c) v = rng() % 3 == 0 ? 0 : rng() % 12;
    if (c.front() == 0) c.front() = 1;
    if (c.back() == 0) c.back() = 1;
    const auto w = detect_window(c);  // returning at all is termination
    std::vector<std::size_t> inner(c.begin() + static_cast<long>(w.first), c.begin() + static_cast<long>(w.last) + 1);
    idempotent += detect_window(inner) == WeekInterval{0, inner.size() - 1} && c[w.first] > 0 && c[w.last] > 0;
    const auto peak = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    const std::size_t top = c[peak];
    bool kept = false;
    for (std::size_t i = w.first; i <= w.last; ++i) kept = kept || c[i] == top;
    max_kept += kept;
  }
  detail = fmt("fuzz %zu series: idempotent %zu, window holds a maximum week %zu", n, idempotent, max_kept);
  return idempotent == n;
}

void ac4_to_ac7() {
  const auto t0 = Clock::now();
  const auto world = generate(SynthParams{});
  const auto ds = ReviewDataset::build(world.reviews, world.stores);
  PipelineConfig cfg;
  const auto s = run_pipeline(ds, cfg, std::nullopt, world.truth);
  std::printf("info: default synthetic world %zu reviews, %zu users, pipeline %.1fs\n", ds.review_count(),
              ds.user_count(), seconds_since(t0));

  const auto& cv = *s.cv_metrics;
  const double auc = cv.auc.value_or(0.0);
  verdict("AC4", s.labels.size() >= 170 && cv.f1 >= 0.90 && auc >= 0.95 && s.model->c == 18.0 && s.model->gamma == 0.09,
          fmt("%zu labeled communities, 5-fold weighted F1 %.4f, AUC %.4f (C=%g, gamma=%g)", s.labels.size(), cv.f1,
              auc, s.model->c, s.model->gamma));

  const auto rec = campaign_recovery(ds, *s.partition, s.campaigns->campaigns, world.truth);
  std::string fuzz;
  const bool fuzz_ok = ac5_fuzz(fuzz);
  verdict("AC5", rec.rate >= 0.90 && fuzz_ok,
          fmt("recovered %zu/%zu planted campaigns (%.4f) within 1 week; ", rec.recovered, rec.planted, rec.rate) + fuzz);

  const std::size_t k = std::min<std::size_t>(100, world.truth.elite_users.size());
  const double p_at_k = precision_at_k(s.elite->elite, ds, world.truth, k);
  bool disjoint = true;
  for (const auto& e : s.elite->elite)
    disjoint = disjoint && s.partition->communities[s.partition->assignment[e.user]].size() < 2;
  verdict("AC6", p_at_k >= 0.90 && disjoint,
          fmt("precision@%zu %.4f over %zu ranked elite, disjoint from communities: %s", k, p_at_k,
              s.elite->elite.size(), disjoint ? "yes" : "no"));

  const auto periods = planted_periods(ds, world.truth);
  std::array<double, 4> r{};
  for (std::size_t i = 0; i < 4; ++i) r[i] = early_detection_rate(*s.alerts, periods, kPrefixFractions[i]);
  const bool mono = r[0] <= r[1] && r[1] <= r[2] && r[2] <= r[3];
  verdict("AC7", r[3] >= 0.85 && mono && r[2] >= 0.5,
          fmt("%zu alerts at threshold %d; detection 1/4 %.4f, 1/3 %.4f, 1/2 %.4f, full %.4f", s.alerts->size(),
              cfg.alert_threshold, r[0], r[1], r[2], r[3]));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SYBILWATCH_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ac8_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("sybilwatch_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const std::string w = " -w " + dir.string();
  const std::string gt = " --ground-truth " + (dir / "ground_truth.json").string();
  bool ok = run_cli("synth" + w + " --target-reviews 60000") == 0;
  ok = ok && run_cli("pipeline" + w + gt + " --seed 42 --workers 1") == 0;
  const std::string a = slurp(dir / "report.json");
  ok = ok && run_cli("pipeline" + w + gt + " --seed 42 --workers 4") == 0;
  const std::string b = slurp(dir / "report.json");
  verdict("AC8", ok && !a.empty() && a == b,
          fmt("pipeline --seed 42 with 1 and 4 workers: %zu-byte reports %s", a.size(),
              a == b ? "identical" : "differ"));
  fs::remove_all(dir);
}

void ac9_performance() {
  const auto world = generate(scaled_params(1000000));
  const auto ds = ReviewDataset::build(world.reviews, world.stores);
  PipelineConfig cfg;
  const auto t0 = Clock::now();
  const auto s = run_pipeline(ds, cfg, std::nullopt, world.truth);
  const double total = seconds_since(t0);
  std::string phases;
  std::string dominant;
  double longest = 0.0;
  for (const auto& [name, sec] : s.timings) {
    phases += fmt(" %s=%.2fs", name.c_str(), sec);
    if (sec > longest) {
      longest = sec;
      dominant = name;
    }
  }
  verdict("AC9", total < 600.0,
          fmt("%zu reviews in %.1fs on %u hardware threads; longest phase: %s;", ds.review_count(), total,
              std::thread::hardware_concurrency(), dominant.c_str()) +
              phases);
}

}  // namespace

int main() {
  ac1_similarity_oracle();
  ac2_louvain_optimality();
  ac3_feature_oracle();
  ac4_to_ac7();
  ac8_determinism();
  ac9_performance();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
