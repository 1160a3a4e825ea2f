// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

namespace wicount {

enum class BackboneKind { convnext_tiny, resnet18, mobilenet_v3_small };

std::string_view to_string(BackboneKind k);
std::optional<BackboneKind> parse_backbone(std::string_view s);

/// Pooled feature width of each architecture: 768 / 512 / 576.
std::int64_t feature_dim(BackboneKind k);

/// Convolutional feature extractor with its classification layer removed.
/// forward() maps [N, 3, H, W] to the global-average-pooled [N, d] features.
/// Submodule and parameter names follow the torchvision definitions so that
/// exported ImageNet state dicts load by name.
class BackboneImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(torch::Tensor x) = 0;
  virtual BackboneKind kind() const = 0;
  std::int64_t feature_dim() const { return wicount::feature_dim(kind()); }
};

/// Builds the architecture with torchvision's initialisation scheme, drawing
/// from the current torch generator.
std::shared_ptr<BackboneImpl> make_backbone(BackboneKind kind);

/// Width of the last layer actually present in a constructed backbone; used
/// to assert the pinned feature dimension at construction.
std::int64_t measured_feature_dim(BackboneImpl& backbone);

}  // namespace wicount
