// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "wicount/error.hpp"

namespace wicount {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ContractViolation(std::string(what) + ": length mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
  }
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::string_view to_string(Task t) {
  return t == Task::identity_dependent ? "identity_dependent" : "identity_agnostic";
}

std::optional<Task> parse_task(std::string_view s) {
  if (s == "identity_dependent") return Task::identity_dependent;
  if (s == "identity_agnostic") return Task::identity_agnostic;
  return std::nullopt;
}

ClassificationMetrics classification_metrics(std::span<const SlotLabels> predictions,
                                             std::span<const SlotLabels> truths,
                                             bool include_absent) {
  require_same_length(predictions.size(), truths.size(), "classification_metrics");
  ClassificationMetrics m;
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      const auto t = static_cast<std::size_t>(class_index(truths[i].slots[u]));
      const auto p = static_cast<std::size_t>(class_index(predictions[i].slots[u]));
      ++m.confusion[t][p];
      ++total;
      correct += t == p ? 1 : 0;
    }
  }
  m.accuracy = safe_div(static_cast<double>(correct), static_cast<double>(total));
  const std::size_t first = include_absent ? 0 : 1;
  for (std::size_t k = 0; k < kClasses; ++k) {
    std::size_t tp = m.confusion[k][k], pred = 0, actual = 0;
    for (std::size_t j = 0; j < kClasses; ++j) {
      pred += m.confusion[j][k];
      actual += m.confusion[k][j];
    }
    m.precision[k] = safe_div(static_cast<double>(tp), static_cast<double>(pred));
    m.recall[k] = safe_div(static_cast<double>(tp), static_cast<double>(actual));
    m.f1[k] = safe_div(2.0 * m.precision[k] * m.recall[k], m.precision[k] + m.recall[k]);
  }
  const double n_classes = static_cast<double>(kClasses - first);
  for (std::size_t k = first; k < kClasses; ++k) {
    m.macro_precision += m.precision[k];
    m.macro_recall += m.recall[k];
    m.macro_f1 += m.f1[k];
  }
  m.macro_precision /= n_classes;
  m.macro_recall /= n_classes;
  m.macro_f1 /= n_classes;
  return m;
}

CountingMetrics counting_metrics(std::span<const CountPrediction> predicted,
                                 std::span<const CountVector> truths, R2Mode mode) {
  require_same_length(predicted.size(), truths.size(), "counting_metrics");
  CountingMetrics m;
  const std::size_t n = truths.size();
  if (n == 0) return m;
  double abs_err = 0.0;
  std::size_t cells_ok = 0, exact = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const CountVector rounded = round_counts(predicted[i]);
    bool all = true;
    for (std::size_t k = 0; k < kActivities; ++k) {
      abs_err += std::abs(predicted[i][k] - truths[i][k]);
      const bool ok = rounded[k] == truths[i][k];
      cells_ok += ok ? 1 : 0;
      all = all && ok;
    }
    exact += all ? 1 : 0;
  }
  const double cells = static_cast<double>(n * kActivities);
  m.mae = abs_err / cells;
  m.cell_accuracy = static_cast<double>(cells_ok) / cells;
  m.exact_match = static_cast<double>(exact) / static_cast<double>(n);

  if (mode == R2Mode::flattened) {
    double mean = 0.0;
    for (const auto& t : truths)
      for (int v : t) mean += v;
    mean /= cells;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < kActivities; ++k) {
        ss_res += std::pow(predicted[i][k] - truths[i][k], 2);
        ss_tot += std::pow(truths[i][k] - mean, 2);
      }
    }
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  } else {
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 0; k < kActivities; ++k) {
      double mean = 0.0;
      for (const auto& t : truths) mean += t[k];
      mean /= static_cast<double>(n);
      double ss_res = 0.0, ss_tot = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ss_res += std::pow(predicted[i][k] - truths[i][k], 2);
        ss_tot += std::pow(truths[i][k] - mean, 2);
      }
      if (ss_tot > 0.0) {
        sum += 1.0 - ss_res / ss_tot;
        ++defined;
      }
    }
    if (defined > 0) m.r2 = sum / static_cast<double>(defined);
  }
  return m;
}

std::array<double, kActivities> per_activity_mae(std::span<const CountPrediction> predicted,
                                                 std::span<const CountVector> truths) {
  require_same_length(predicted.size(), truths.size(), "per_activity_mae");
  std::array<double, kActivities> out{};
  if (truths.empty()) return out;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    for (std::size_t k = 0; k < kActivities; ++k) out[k] += std::abs(predicted[i][k] - truths[i][k]);
  }
  for (double& v : out) v /= static_cast<double>(truths.size());
  return out;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd r;
  r.n = values.size();
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(var / static_cast<double>(values.size()));
  return r;
}

UserCountBreakdown per_user_count_breakdown(std::span<const SlotLabels> predictions,
                                            std::span<const SlotLabels> truths,
                                            bool include_absent) {
  require_same_length(predictions.size(), truths.size(), "per_user_count_breakdown");
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < truths.size(); ++i) groups[truths[i].present_count()].push_back(i);
  UserCountBreakdown out;
  for (const auto& [count, idx] : groups) {
    std::vector<SlotLabels> p, t;
    std::vector<double> acc;
    for (std::size_t i : idx) {
      p.push_back(predictions[i]);
      t.push_back(truths[i]);
      std::size_t ok = 0;
      for (std::size_t u = 0; u < kUserSlots; ++u) ok += predictions[i].slots[u] == truths[i].slots[u];
      acc.push_back(static_cast<double>(ok) / static_cast<double>(kUserSlots));
    }
    const auto ms = mean_sd(acc);
    out[count] = {idx.size(), classification_metrics(p, t, include_absent).macro_f1, ms.mean, ms.sd};
  }
  return out;
}

UserCountBreakdown per_user_count_breakdown(std::span<const CountPrediction> predicted,
                                            std::span<const CountVector> truths,
                                            std::span<const SlotLabels> annotations) {
  require_same_length(predicted.size(), truths.size(), "per_user_count_breakdown");
  require_same_length(annotations.size(), truths.size(), "per_user_count_breakdown");
  std::map<std::size_t, std::vector<double>> groups;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    double err = 0.0;
    for (std::size_t k = 0; k < kActivities; ++k) err += std::abs(predicted[i][k] - truths[i][k]);
    groups[annotations[i].present_count()].push_back(err / static_cast<double>(kActivities));
  }
  UserCountBreakdown out;
  for (const auto& [count, errs] : groups) {
    const auto ms = mean_sd(errs);
    out[count] = {errs.size(), ms.mean, ms.mean, ms.sd};
  }
  return out;
}

InvarianceReport identity_invariance(std::span<const std::vector<float>> embeddings,
                                     std::span<const SlotLabels> annotations) {
  require_same_length(embeddings.size(), annotations.size(), "identity_invariance");
  InvarianceReport r;
  std::size_t dim = 0;
  for (const auto& e : embeddings) {
    if (dim == 0) dim = e.size();
    if (e.size() != dim) throw ContractViolation("identity_invariance: ragged embeddings");
  }
  for (std::size_t u = 0; u < kUserSlots; ++u) {
    std::vector<double> centroid(dim, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < annotations.size(); ++i) {
      const auto& a = annotations[i];
      if (a.present_count() != 1 || !a.slots[u]) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += embeddings[i][d];
      ++count;
    }
    if (count == 0) {
      r.excluded_users.push_back(static_cast<int>(u) + 1);
      continue;
    }
    for (double& v : centroid) v /= static_cast<double>(count);
    r.users.push_back(static_cast<int>(u) + 1);
    r.centroids.push_back(std::move(centroid));
    r.samples_per_user.push_back(count);
  }
  std::vector<double> dists, coss;
  for (std::size_t a = 0; a < r.users.size(); ++a) {
    for (std::size_t b = a + 1; b < r.users.size(); ++b) {
      const auto& x = r.centroids[a];
      const auto& y = r.centroids[b];
      double d2 = 0.0, dot = 0.0, nx = 0.0, ny = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        d2 += (x[d] - y[d]) * (x[d] - y[d]);
        dot += x[d] * y[d];
        nx += x[d] * x[d];
        ny += y[d] * y[d];
      }
      const double denom = std::sqrt(nx) * std::sqrt(ny);
      double cos = denom > 0.0 ? dot / denom : 0.0;
      cos = std::clamp(cos, -1.0, 1.0);
      r.pairs.push_back({r.users[a], r.users[b], std::sqrt(d2), cos});
      dists.push_back(std::sqrt(d2));
      coss.push_back(cos);
    }
  }
  const auto d = mean_sd(dists);
  const auto c = mean_sd(coss);
  r.euclidean_mean = d.mean;
  r.euclidean_sd = d.sd;
  r.cosine_mean = c.mean;
  r.cosine_sd = c.sd;
  return r;
}

MetricReport make_report(std::span<const SlotLabels> predictions, std::span<const SlotLabels> truths,
                         bool include_absent) {
  const auto m = classification_metrics(predictions, truths, include_absent);
  MetricReport r;
  r.task = Task::identity_dependent;
  r.samples = truths.size();
  r.scalars["accuracy"] = m.accuracy;
  r.scalars["macro_precision"] = m.macro_precision;
  r.scalars["macro_recall"] = m.macro_recall;
  r.scalars["macro_f1"] = m.macro_f1;
  r.per_user_count = per_user_count_breakdown(predictions, truths, include_absent);
  r.confusion = m.confusion;
  return r;
}

MetricReport make_report(std::span<const CountPrediction> predicted,
                         std::span<const CountVector> truths,
                         std::span<const SlotLabels> annotations, R2Mode mode) {
  const auto m = counting_metrics(predicted, truths, mode);
  MetricReport r;
  r.task = Task::identity_agnostic;
  r.samples = truths.size();
  r.scalars["mae"] = m.mae;
  r.scalars["r2"] = m.r2;
  r.scalars["cell_accuracy"] = m.cell_accuracy;
  r.scalars["exact_match"] = m.exact_match;
  r.per_activity_mae = per_activity_mae(predicted, truths);
  r.per_user_count = per_user_count_breakdown(predicted, truths, annotations);
  return r;
}

std::map<std::string, MeanSd> aggregate(std::span<const MetricReport> reports) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports) {
    if (r.task != reports.front().task) {
      throw ContractViolation("aggregate: reports mix tasks");
    }
    for (const auto& [k, v] : r.scalars) {
      auto& bucket = values[k];
      if (v) bucket.push_back(*v);
    }
  }
  std::map<std::string, MeanSd> out;
  for (const auto& [k, vs] : values) out[k] = mean_sd(vs);
  return out;
}

}  // namespace wicount
