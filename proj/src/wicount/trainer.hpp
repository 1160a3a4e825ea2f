// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wicount/dataset.hpp"
#include "wicount/lr_schedule.hpp"
#include "wicount/metrics.hpp"
#include "wicount/model.hpp"
#include "wicount/transform.hpp"

namespace wicount {

enum class ScheduleGranularity { step, epoch };
enum class ModelSelection { best, last };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double weight_decay = 1e-2;
  double clip_max_norm = 1.0;
  double lr_projection_peak = 1e-3;
  double lr_backbone_head_peak = 1e-4;
  double warmup_fraction = 0.10;
  ScheduleGranularity schedule_granularity = ScheduleGranularity::step;
  double focal_gamma = 2.0;
  std::uint64_t seed = 0;
  /// Share of the training ids held out for model selection (0 disables).
  double validation_fraction = 0.0;
  ModelSelection model_selection = ModelSelection::best;
};

void validate(const TrainConfig& cfg);

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double lr_projection = 0.0;
  double lr_body = 0.0;
  double grad_norm = 0.0;     // before clipping
  double clipped_norm = 0.0;  // after clipping
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  /// macro-F1 (identity-dependent) or MAE (counting) on the validation ids.
  std::optional<double> validation_metric;
  /// Fraction of counting-head outputs that were exactly zero (dead ReLU
  /// diagnostic); 0 for the identity-dependent head.
  double zero_output_fraction = 0.0;
};

struct TrainingLog {
  std::int64_t total_steps = 0;
  std::int64_t steps_per_epoch = 0;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::optional<int> best_epoch;
};

/// Learning-rate schedules of the two parameter groups for a run.
struct GroupSchedules {
  LrSchedule projection;
  LrSchedule body;
  ScheduleGranularity granularity = ScheduleGranularity::step;
  std::int64_t steps_per_epoch = 1;

  static GroupSchedules make(const TrainConfig& cfg, std::int64_t steps_per_epoch);
  double projection_lr(std::int64_t step) const;
  double body_lr(std::int64_t step) const;
};

/// Group 0: projection parameters; group 1: backbone and head parameters.
/// Throws ContractViolation unless every trainable parameter of the model
/// belongs to exactly one group.
std::vector<torch::optim::OptimizerParamGroup> parameter_groups(CsiNet& model,
                                                                const TrainConfig& cfg);

double global_grad_norm(const std::vector<torch::Tensor>& params);

/// Scales gradients so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
double clip_global_norm(const std::vector<torch::Tensor>& params, double max_norm);

struct CheckpointMeta {
  std::string model_fingerprint;
  std::string config_fingerprint;
  std::int64_t step = 0;
};

void save_checkpoint(const std::filesystem::path& path, CsiNet& model,
                     torch::optim::Optimizer* optimizer, const CheckpointMeta& meta);

/// Restores parameters (and optimizer state when given). Throws
/// CheckpointError when the stored model fingerprint differs from the
/// model's, or when `expected_config_fingerprint` is non-empty and differs.
CheckpointMeta load_checkpoint(const std::filesystem::path& path, CsiNet& model,
                               torch::optim::Optimizer* optimizer,
                               const std::string& expected_config_fingerprint = {});

using ImageCache = std::unordered_map<std::string, Matrix>;

/// [N, 1, R, R] tensor of eval-mode images (cached when a cache is given).
torch::Tensor eval_images(const Dataset& data, const std::vector<std::string>& ids,
                          const TransformConfig& tcfg, ImageCache* cache = nullptr);

/// One-hot [N, 6, 10] or count [N, 9] targets.
torch::Tensor targets_tensor(Task task, const std::vector<SlotLabels>& labels);

struct FitOptions {
  /// Where checkpoint_last.pt / checkpoint_best.pt go; empty disables.
  std::filesystem::path checkpoint_dir;
  std::filesystem::path resume_from;
  /// Stop once this many optimizer steps have run in total.
  std::optional<std::int64_t> stop_after_steps;
  std::string config_fingerprint;
  ImageCache* cache = nullptr;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// AdamW with two parameter groups, per-step warmup + cosine learning rates,
/// global gradient clipping and seeded batch order/augmentation. Runs
/// epochs * ceil(n / batch_size) steps. Throws NumericError on a non-finite
/// loss.
TrainingLog fit(CsiNet& model, const Dataset& data, const std::vector<std::string>& train_ids,
                const std::vector<std::string>& validation_ids, const TrainConfig& cfg,
                const TransformConfig& tcfg, const FitOptions& opts = {});

struct Predictions {
  std::vector<SlotLabels> truths;
  std::vector<SlotLabels> slots;            // identity-dependent
  std::vector<CountPrediction> counts;      // counting
  std::vector<std::vector<float>> embeddings;
};

/// Eval-mode inference over `ids` in batches.
Predictions predict(CsiNet& model, const Dataset& data, const std::vector<std::string>& ids,
                    const TransformConfig& tcfg, int batch_size = 32, bool with_embeddings = false,
                    ImageCache* cache = nullptr);

struct EvalOptions {
  bool macro_include_absent = true;
  R2Mode r2_mode = R2Mode::flattened;
};

MetricReport evaluate(CsiNet& model, const Dataset& data, const std::vector<std::string>& ids,
                      const TransformConfig& tcfg, const EvalOptions& opts = {},
                      ImageCache* cache = nullptr);

MetricReport report_from_predictions(Task task, const Predictions& p, const EvalOptions& opts);

}  // namespace wicount
