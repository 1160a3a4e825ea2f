// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "wicount/backbones.hpp"
#include "wicount/metrics.hpp"

namespace wicount {

enum class ChannelStrategy {
  /// Learnable per-channel scale and bias (a 1x1 convolution 1 -> 3).
  projection,
  /// Fixed replication of the single channel into three.
  replicate,
};

std::string_view to_string(ChannelStrategy c);
std::optional<ChannelStrategy> parse_channel_strategy(std::string_view s);

struct ModelSpec {
  Task task = Task::identity_agnostic;
  BackboneKind backbone = BackboneKind::convnext_tiny;
  bool pretrained = true;
  /// safetensors file with torchvision parameter names; required when
  /// `pretrained` is set.
  std::filesystem::path weights_path;
  ChannelStrategy channel_strategy = ChannelStrategy::projection;
  std::uint64_t init_seed = 0;
  /// Overrides the running-statistics momentum of every BatchNorm layer;
  /// nullopt keeps the architecture's own value (0.01 for MobileNetV3).
  std::optional<double> batchnorm_momentum;

  /// Identifies the architecture a checkpoint belongs to.
  std::string fingerprint() const;
};

/// channel c = weight[c] * x + bias[c] for a single-channel input.
class ProjectionImpl : public torch::nn::Module {
 public:
  explicit ProjectionImpl(bool trainable = true);
  /// [N, 1, H, W] -> [N, 3, H, W]
  torch::Tensor forward(torch::Tensor x);

  torch::Tensor weight;  // [3]
  torch::Tensor bias;    // [3]
};
TORCH_MODULE(Projection);

/// Projection + backbone + task head. forward() returns [N, 6, 10] slot
/// logits for the identity-dependent task and [N, 9] non-negative counts for
/// the counting task.
class CsiNetImpl : public torch::nn::Module {
 public:
  explicit CsiNetImpl(const ModelSpec& spec);

  torch::Tensor forward(torch::Tensor x);
  /// Pooled backbone features z, [N, d].
  torch::Tensor features(torch::Tensor x);
  torch::Tensor head_forward(torch::Tensor z);

  const ModelSpec& spec() const { return spec_; }
  std::int64_t feature_dim() const { return backbone_->feature_dim(); }

  std::vector<torch::Tensor> projection_parameters();
  /// Backbone and head parameters.
  std::vector<torch::Tensor> body_parameters();

  Projection projection{nullptr};
  std::shared_ptr<BackboneImpl> backbone_;
  torch::nn::Linear head{nullptr};

 private:
  ModelSpec spec_;
};
TORCH_MODULE(CsiNet);

/// Builds the model with a seeded initialisation and, when requested, loads
/// the pretrained backbone weights. Throws CheckpointError if pretrained
/// weights are requested but unavailable.
CsiNet build_model(const ModelSpec& spec);

/// Mean over slots (and batch) of -(1 - p_t)^gamma * log(p_t), p_t the softmax
/// probability of the target class. `logits` is [U, K] or [N, U, K];
/// `targets` has the same shape and is one-hot.
torch::Tensor focal_loss(const torch::Tensor& logits, const torch::Tensor& targets,
                         double gamma = 2.0);

/// Mean squared error over the nine counts (and batch). Predictions must be
/// non-negative.
torch::Tensor count_loss(const torch::Tensor& predicted, const torch::Tensor& targets);

}  // namespace wicount
