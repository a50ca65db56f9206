#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sybilwatch/core.hpp"

namespace sybilwatch {

enum class Label { kBenign, kSybil };

inline const char* label_name(Label l) { return l == Label::kSybil ? "sybil" : "benign"; }

inline Label parse_label(std::string_view s) {
  if (s == "sybil") return Label::kSybil;
  if (s == "benign") return Label::kBenign;
  throw ValidationError("unknown label '" + std::string(s) + "' (expected benign or sybil)");
}

// Per-feature z-scoring; zero-variance columns keep a unit divisor.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(std::span<const std::vector<double>> rows) {
    Standardizer s;
    if (rows.empty()) return s;
    const std::size_t d = rows.front().size();
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < d; ++k) s.mean[k] += r[k];
    }
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < d; ++k) s.stddev[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
    }
    for (auto& v : s.stddev) {
      v = std::sqrt(v / static_cast<double>(rows.size()));
      if (!(v > 1e-12)) v = 1.0;
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) out[k] = (row[k] - mean[k]) / stddev[k];
    return out;
  }
};

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d2);
}

struct SvmParams {
  double c = 18.0;
  double gamma = 0.09;
  double tolerance = 1e-3;
  std::size_t max_iterations = 10'000'000;
};

struct TrainedModel {
  Standardizer scaler;
  double c = 0.0;
  double gamma = 0.0;
  double bias = 0.0;
  std::vector<std::vector<double>> support;  // standardized support vectors
  std::vector<double> coef;                  // y_i * alpha_i

  // Signed distance-like score; positive means Sybil.
  double decision(std::span<const double> raw) const { return decision_standardized(scaler.apply(raw)); }

  double decision_standardized(std::span<const double> z) const {
    double f = bias;
    for (std::size_t i = 0; i < support.size(); ++i) f += coef[i] * rbf_kernel(support[i], z, gamma);
    return f;
  }

  std::pair<Label, double> predict(std::span<const double> raw) const {
    const double m = decision(raw);
    return {m > 0.0 ? Label::kSybil : Label::kBenign, m};
  }
};

namespace detail {

// Soft-margin kernel dual via SMO with second-order working-set selection.
// Rows are already standardized; y is +1 (Sybil) / -1 (benign).
inline TrainedModel solve_dual(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                               const SvmParams& p) {
  const std::size_t n = x.size();
  constexpr double kTau = 1e-12;
  const bool dense = n <= 4000;
  std::vector<double> kmat;
  if (dense) {
    kmat.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        kmat[i * n + j] = kmat[j * n + i] = rbf_kernel(x[i], x[j], p.gamma);
      }
    }
  }
  std::vector<double> row_i(n), row_j(n);
  auto kernel_row = [&](std::size_t i, std::vector<double>& out) {
    if (dense) {
      std::copy(kmat.begin() + static_cast<std::ptrdiff_t>(i * n),
                kmat.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), out.begin());
    } else {
      for (std::size_t t = 0; t < n; ++t) out[t] = rbf_kernel(x[i], x[t], p.gamma);
    }
  };

  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  const double c = p.c;
  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  for (std::size_t iter = 0; iter < p.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_up = y[t] == 1 ? !upper(t) : !lower(t);
      if (in_up && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) break;
    kernel_row(i, row_i);

    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_low = y[t] == 1 ? !lower(t) : !upper(t);
      if (!in_low) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      const double diff = gmax + yg;
      if (diff > 0.0) {
        double quad = row_i[i] + (dense ? kmat[t * n + t] : 1.0) - 2.0 * row_i[t];
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < p.tolerance || j == n) break;
    kernel_row(j, row_j);

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = row_i[i] + row_j[j] - 2.0 * row_i[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = row_i[i] + row_j[j] - 2.0 * row_i[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * row_i[t] * di + y[j] * row_j[t] * dj);
    }
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  TrainedModel m;
  m.c = p.c;
  m.gamma = p.gamma;
  m.bias = -rho;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      m.support.push_back(x[t]);
      m.coef.push_back(y[t] * alpha[t]);
    }
  }
  return m;
}

}  // namespace detail

// Fits the standardizer on `rows`, then the RBF soft-margin classifier.
inline TrainedModel fit_svm(std::span<const std::vector<double>> rows, std::span<const Label> labels,
                            const SvmParams& params) {
  Standardizer scaler = Standardizer::fit(rows);
  std::vector<std::vector<double>> z;
  z.reserve(rows.size());
  for (const auto& r : rows) z.push_back(scaler.apply(r));
  std::vector<int> y;
  for (Label l : labels) y.push_back(l == Label::kSybil ? 1 : -1);
  TrainedModel m = detail::solve_dual(z, y, params);
  m.scaler = std::move(scaler);
  return m;
}

struct FoldMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // undefined when the fold holds one class
};

struct EvalMetrics {
  double precision = 0.0;  // support-weighted over both classes
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
  std::vector<FoldMetrics> folds;
};

// Area under the ROC curve as the Mann-Whitney statistic over margins, with
// tied scores counting one half. Positive class is Sybil.
inline std::optional<double> auc_from_margins(std::span<const double> margins, std::span<const Label> truth) {
  std::vector<std::size_t> order(margins.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return margins[a] < margins[b]; });
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && margins[order[j]] == margins[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (truth[order[k]] == Label::kSybil) rank_sum += avg_rank;
    }
    i = j;
  }
  for (Label l : truth) (l == Label::kSybil ? pos : neg) += 1;
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

inline FoldMetrics evaluate_fold(std::span<const Label> predicted, std::span<const Label> truth,
                                 std::span<const double> margins) {
  if (predicted.empty()) throw ValidationError("cannot evaluate an empty prediction set");
  if (predicted.size() != truth.size() || margins.size() != truth.size())
    throw ValidationError("predictions, labels and margins must align");
  FoldMetrics m;
  const double n = static_cast<double>(truth.size());
  for (Label cls : {Label::kBenign, Label::kSybil}) {
    double tp = 0, pred = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i] == cls) ++pred;
      if (truth[i] == cls) ++support;
      if (predicted[i] == cls && truth[i] == cls) ++tp;
    }
    const double precision = pred > 0 ? tp / pred : 0.0;
    const double recall = support > 0 ? tp / support : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    const double w = support / n;
    m.precision += w * precision;
    m.recall += w * recall;
    m.f1 += w * f1;
  }
  m.auc = auc_from_margins(margins, truth);
  return m;
}

inline EvalMetrics evaluate(std::span<const Label> predicted, std::span<const Label> truth,
                            std::span<const double> margins) {
  FoldMetrics f = evaluate_fold(predicted, truth, margins);
  return {f.precision, f.recall, f.f1, f.auc, {f}};
}

struct LabeledExample {
  std::string name;
  std::vector<double> features;
  Label label = Label::kBenign;
};

struct TrainResult {
  TrainedModel model;
  EvalMetrics cv;
  SvmParams params;
};

// Stratified k-fold assignment after a seeded shuffle of each class.
inline std::vector<int> stratified_folds(std::span<const Label> labels, int folds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size(), 0);
  int next = 0;
  for (Label cls : {Label::kBenign, Label::kSybil}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    for (std::size_t i : idx) fold[i] = next++ % folds;
  }
  return fold;
}

inline EvalMetrics cross_validate(std::span<const LabeledExample> data, const SvmParams& params, int folds,
                                  std::uint64_t seed) {
  std::vector<Label> labels;
  for (const auto& e : data) labels.push_back(e.label);
  const std::vector<int> fold_of = stratified_folds(labels, folds, seed);
  EvalMetrics total;
  std::size_t auc_folds = 0;
  double auc_sum = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::vector<double>> train_x;
    std::vector<Label> train_y;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (fold_of[i] == f) {
        test.push_back(i);
      } else {
        train_x.push_back(data[i].features);
        train_y.push_back(data[i].label);
      }
    }
    if (test.empty()) continue;
    TrainedModel m = fit_svm(train_x, train_y, params);
    std::vector<Label> pred, truth;
    std::vector<double> margins;
    for (std::size_t i : test) {
      auto [l, margin] = m.predict(data[i].features);
      pred.push_back(l);
      truth.push_back(data[i].label);
      margins.push_back(margin);
    }
    FoldMetrics fm = evaluate_fold(pred, truth, margins);
    total.folds.push_back(fm);
    if (fm.auc) {
      auc_sum += *fm.auc;
      ++auc_folds;
    }
  }
  const double k = static_cast<double>(total.folds.size());
  for (const auto& fm : total.folds) {
    total.precision += fm.precision / k;
    total.recall += fm.recall / k;
    total.f1 += fm.f1 / k;
  }
  if (auc_folds > 0) total.auc = auc_sum / static_cast<double>(auc_folds);
  return total;
}

// Cross-validates, optionally grid-searching C and gamma over powers of 3
// around the given values, then refits on every example.
inline TrainResult train(std::span<const LabeledExample> data, SvmParams params, int folds,
                         std::uint64_t seed, bool grid_search = false) {
  std::size_t sybil = 0, benign = 0;
  for (const auto& e : data) {
    for (double v : e.features) {
      if (!std::isfinite(v)) throw ValidationError("non-finite feature in community " + e.name);
    }
    (e.label == Label::kSybil ? sybil : benign)++;
  }
  if (sybil == 0 || benign == 0) throw ValidationError("training labels contain a single class");
  if (sybil < 2 || benign < 2) throw ValidationError("training needs at least 2 examples of each class");

  TrainResult result;
  result.params = params;
  result.cv = cross_validate(data, params, folds, seed);
  if (grid_search) {
    for (int ci = -2; ci <= 2; ++ci) {
      for (int gi = -2; gi <= 2; ++gi) {
        if (ci == 0 && gi == 0) continue;
        SvmParams candidate = params;
        candidate.c = params.c * std::pow(3.0, ci);
        candidate.gamma = params.gamma * std::pow(3.0, gi);
        EvalMetrics m = cross_validate(data, candidate, folds, seed);
        if (m.f1 > result.cv.f1) {
          result.cv = m;
          result.params = candidate;
        }
      }
    }
  }
  std::vector<std::vector<double>> x;
  std::vector<Label> y;
  for (const auto& e : data) {
    x.push_back(e.features);
    y.push_back(e.label);
  }
  result.model = fit_svm(x, y, result.params);
  return result;
}

}  // namespace sybilwatch
