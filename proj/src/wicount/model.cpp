// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/model.hpp"

#include "wicount/error.hpp"
#include "wicount/weights.hpp"

namespace wicount {

std::string_view to_string(ChannelStrategy c) {
  return c == ChannelStrategy::projection ? "projection" : "replicate";
}

std::optional<ChannelStrategy> parse_channel_strategy(std::string_view s) {
  if (s == "projection") return ChannelStrategy::projection;
  if (s == "replicate") return ChannelStrategy::replicate;
  return std::nullopt;
}

std::string ModelSpec::fingerprint() const {
  return std::string(to_string(task)) + "/" + std::string(to_string(backbone)) + "/" +
         std::string(to_string(channel_strategy));
}

ProjectionImpl::ProjectionImpl(bool trainable) {
  // Starts as plain replication.
  weight = register_parameter("weight", torch::ones({3}), trainable);
  bias = register_parameter("bias", torch::zeros({3}), trainable);
}

torch::Tensor ProjectionImpl::forward(torch::Tensor x) {
  TORCH_CHECK(x.dim() == 4 && x.size(1) == 1, "projection expects [N, 1, H, W]");
  return x * weight.view({1, 3, 1, 1}) + bias.view({1, 3, 1, 1});
}

CsiNetImpl::CsiNetImpl(const ModelSpec& spec) : spec_(spec) {
  projection = register_module(
      "projection", Projection(spec.channel_strategy == ChannelStrategy::projection));
  backbone_ = register_module("backbone", make_backbone(spec.backbone));
  if (spec.batchnorm_momentum) {
    for (auto& m : backbone_->modules()) {
      if (auto* bn = dynamic_cast<torch::nn::BatchNorm2dImpl*>(m.get())) {
        bn->options.momentum(*spec.batchnorm_momentum);
      }
    }
  }
  const std::int64_t outputs = spec.task == Task::identity_dependent
                                   ? static_cast<std::int64_t>(kUserSlots * kClasses)
                                   : static_cast<std::int64_t>(kActivities);
  head = register_module("head", torch::nn::Linear(backbone_->feature_dim(), outputs));
}

torch::Tensor CsiNetImpl::features(torch::Tensor x) {
  return backbone_->forward(projection(x));
}

torch::Tensor CsiNetImpl::head_forward(torch::Tensor z) {
  auto out = head(z);
  if (spec_.task == Task::identity_dependent) {
    return out.view({-1, static_cast<std::int64_t>(kUserSlots), static_cast<std::int64_t>(kClasses)});
  }
  return torch::relu(out);
}

torch::Tensor CsiNetImpl::forward(torch::Tensor x) { return head_forward(features(x)); }

std::vector<torch::Tensor> CsiNetImpl::projection_parameters() {
  std::vector<torch::Tensor> out;
  for (auto& p : projection->parameters()) {
    if (p.requires_grad()) out.push_back(p);
  }
  return out;
}

std::vector<torch::Tensor> CsiNetImpl::body_parameters() {
  std::vector<torch::Tensor> out;
  for (auto& p : backbone_->parameters()) {
    if (p.requires_grad()) out.push_back(p);
  }
  for (auto& p : head->parameters()) out.push_back(p);
  return out;
}

CsiNet build_model(const ModelSpec& spec) {
  if (spec.pretrained) {
    if (spec.weights_path.empty() || !std::filesystem::exists(spec.weights_path)) {
      throw CheckpointError("pretrained weights for " + std::string(to_string(spec.backbone)) +
                            " not found at '" + spec.weights_path.string() +
                            "' (export them with tools/export_pretrained.py)");
    }
  }
  torch::manual_seed(spec.init_seed);
  CsiNet model(spec);
  if (spec.pretrained) load_named_tensors(*model->backbone_, spec.weights_path);
  return model;
}

torch::Tensor focal_loss(const torch::Tensor& logits, const torch::Tensor& targets, double gamma) {
  if (!(gamma >= 0.0)) throw ContractViolation("focal_loss: gamma must be >= 0");
  if (logits.sizes() != targets.sizes() || logits.size(-1) != static_cast<std::int64_t>(kClasses)) {
    throw ContractViolation("focal_loss: logits and targets must share shape [..., U, 10]");
  }
  if (!torch::isfinite(logits).all().item<bool>()) {
    throw NumericError("focal_loss: non-finite logits");
  }
  const auto log_p = torch::log_softmax(logits, -1);
  const auto log_pt = (log_p * targets).sum(-1);
  const auto pt = log_pt.exp();
  auto weight = gamma == 0.0 ? torch::ones_like(pt) : (1.0 - pt).clamp_min(0.0).pow(gamma);
  return (-weight * log_pt).mean();
}

torch::Tensor count_loss(const torch::Tensor& predicted, const torch::Tensor& targets) {
  if (predicted.sizes() != targets.sizes() ||
      predicted.size(-1) != static_cast<std::int64_t>(kActivities)) {
    throw ContractViolation("count_loss: predicted and target must share shape [..., 9]");
  }
  if ((predicted < 0).any().item<bool>()) {
    throw ContractViolation("count_loss: negative predicted count");
  }
  return (predicted - targets).pow(2).mean();
}

}  // namespace wicount
