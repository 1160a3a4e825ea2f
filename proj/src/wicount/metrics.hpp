// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wicount/label_codec.hpp"

namespace wicount {

enum class Task { identity_dependent, identity_agnostic };

std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view s);

using ConfusionMatrix = std::array<std::array<std::size_t, kClasses>, kClasses>;

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::array<double, kClasses> precision{};
  std::array<double, kClasses> recall{};
  std::array<double, kClasses> f1{};
  /// confusion[true][predicted], pooled over all (sample, slot) pairs.
  ConfusionMatrix confusion{};
};

/// Pools every (sample, slot) pair into one 10-class problem. A class with no
/// predicted (true) instances gets precision (recall) 0. With
/// `include_absent` false the macro averages run over the nine activities
/// only; accuracy is always pooled over all slots.
ClassificationMetrics classification_metrics(std::span<const SlotLabels> predictions,
                                             std::span<const SlotLabels> truths,
                                             bool include_absent = true);

enum class R2Mode {
  /// One R^2 over all n*9 cells about the global cell mean.
  flattened,
  /// Mean of the nine per-activity R^2 values (undefined columns skipped).
  per_class_mean,
};

struct CountingMetrics {
  double mae = 0.0;
  /// nullopt when the truths have zero variance.
  std::optional<double> r2;
  double cell_accuracy = 0.0;
  double exact_match = 0.0;
};

CountingMetrics counting_metrics(std::span<const CountPrediction> predicted,
                                 std::span<const CountVector> truths,
                                 R2Mode mode = R2Mode::flattened);

std::array<double, kActivities> per_activity_mae(std::span<const CountPrediction> predicted,
                                                 std::span<const CountVector> truths);

/// Task metric for one active-user-count group. For identity-dependent runs
/// `metric` is the pooled macro-F1 of the group and `mean`/`sd` describe the
/// per-sample slot accuracy; for counting runs `metric` and `mean` are the
/// group MAE and `sd` the spread of per-sample MAE. SDs are population SDs.
struct GroupStat {
  std::size_t samples = 0;
  double metric = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

using UserCountBreakdown = std::map<std::size_t, GroupStat>;

UserCountBreakdown per_user_count_breakdown(std::span<const SlotLabels> predictions,
                                            std::span<const SlotLabels> truths,
                                            bool include_absent = true);
UserCountBreakdown per_user_count_breakdown(std::span<const CountPrediction> predicted,
                                            std::span<const CountVector> truths,
                                            std::span<const SlotLabels> annotations);

struct UserPairStat {
  int user_a = 0;  // 1-based
  int user_b = 0;
  double euclidean = 0.0;
  double cosine = 0.0;
};

struct InvarianceReport {
  std::vector<int> users;                       // 1-based, users with a centroid
  std::vector<int> excluded_users;              // no single-user samples
  std::vector<std::vector<double>> centroids;   // parallel to `users`
  std::vector<std::size_t> samples_per_user;
  std::vector<UserPairStat> pairs;
  double euclidean_mean = 0.0;
  double euclidean_sd = 0.0;
  double cosine_mean = 0.0;
  double cosine_sd = 0.0;
};

/// Centroid per user over the samples where that user is the sole occupant,
/// then Euclidean distance and cosine similarity over every user pair.
InvarianceReport identity_invariance(std::span<const std::vector<float>> embeddings,
                                     std::span<const SlotLabels> annotations);

/// Mean and population SD.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

MeanSd mean_sd(std::span<const double> values);

/// Everything evaluated for one split. Scalars use the keys accuracy,
/// macro_precision, macro_recall, macro_f1 (dependent) or mae, r2,
/// cell_accuracy, exact_match (agnostic); an undefined value is nullopt.
struct MetricReport {
  Task task = Task::identity_agnostic;
  std::string split_descriptor;
  std::size_t samples = 0;
  std::map<std::string, std::optional<double>> scalars;
  std::optional<std::array<double, kActivities>> per_activity_mae;
  UserCountBreakdown per_user_count;
  std::optional<ConfusionMatrix> confusion;
};

MetricReport make_report(std::span<const SlotLabels> predictions, std::span<const SlotLabels> truths,
                         bool include_absent = true);
MetricReport make_report(std::span<const CountPrediction> predicted,
                         std::span<const CountVector> truths,
                         std::span<const SlotLabels> annotations, R2Mode mode = R2Mode::flattened);

/// Mean and SD per scalar across splits; undefined entries are skipped.
std::map<std::string, MeanSd> aggregate(std::span<const MetricReport> reports);

}  // namespace wicount
