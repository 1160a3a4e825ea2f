// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/backbones.hpp"

#include <array>
#include <cmath>

#include "wicount/error.hpp"

namespace wicount {

namespace nn = torch::nn;

std::string_view to_string(BackboneKind k) {
  switch (k) {
    case BackboneKind::convnext_tiny: return "convnext_tiny";
    case BackboneKind::resnet18: return "resnet18";
    case BackboneKind::mobilenet_v3_small: return "mobilenet_v3_small";
  }
  return "?";
}

std::optional<BackboneKind> parse_backbone(std::string_view s) {
  if (s == "convnext_tiny") return BackboneKind::convnext_tiny;
  if (s == "resnet18") return BackboneKind::resnet18;
  if (s == "mobilenet_v3_small") return BackboneKind::mobilenet_v3_small;
  return std::nullopt;
}

std::int64_t feature_dim(BackboneKind k) {
  switch (k) {
    case BackboneKind::convnext_tiny: return 768;
    case BackboneKind::resnet18: return 512;
    case BackboneKind::mobilenet_v3_small: return 576;
  }
  return 0;
}

namespace {

// nn::Sequential has a templated forward() and cannot be nested directly.
class SeqImpl : public nn::SequentialImpl {
 public:
  using nn::SequentialImpl::SequentialImpl;
  torch::Tensor forward(torch::Tensor x) { return nn::SequentialImpl::forward(x); }
};
TORCH_MODULE(Seq);

nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride,
                std::int64_t padding, std::int64_t groups = 1, bool bias = false) {
  return nn::Conv2d(
      nn::Conv2dOptions(in, out, k).stride(stride).padding(padding).groups(groups).bias(bias));
}

nn::Functional relu_fn() {
  return nn::Functional([](torch::Tensor x) { return torch::relu(x); });
}
nn::Functional hardswish_fn() {
  return nn::Functional([](torch::Tensor x) { return torch::hardswish(x); });
}

// ---------------------------------------------------------------- ResNet-18

class BasicBlockImpl : public nn::Module {
 public:
  BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride) {
    conv1 = register_module("conv1", conv(in, out, 3, stride, 1));
    bn1 = register_module("bn1", nn::BatchNorm2d(out));
    conv2 = register_module("conv2", conv(out, out, 3, 1, 1));
    bn2 = register_module("bn2", nn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
      downsample = register_module("downsample",
                                   Seq(conv(in, out, 1, stride, 0), nn::BatchNorm2d(out)));
    }
  }

  torch::Tensor forward(torch::Tensor x) {
    auto identity = downsample ? downsample->forward(x) : x;
    auto y = torch::relu(bn1(conv1(x)));
    y = bn2(conv2(y));
    return torch::relu(y + identity);
  }

  nn::Conv2d conv1{nullptr}, conv2{nullptr};
  nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  Seq downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

class ResNet18 final : public BackboneImpl {
 public:
  ResNet18() {
    conv1 = register_module("conv1", conv(3, 64, 7, 2, 3));
    bn1 = register_module("bn1", nn::BatchNorm2d(64));
    const std::array<std::int64_t, 4> widths = {64, 128, 256, 512};
    std::int64_t in = 64;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::int64_t stride = i == 0 ? 1 : 2;
      Seq layer(BasicBlock(in, widths[i], stride), BasicBlock(widths[i], widths[i], 1));
      layers[i] = register_module("layer" + std::to_string(i + 1), layer);
      in = widths[i];
    }
    for (auto& m : modules(/*include_self=*/false)) {
      if (auto* c = m->as<nn::Conv2d>()) {
        nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut, torch::kReLU);
      } else if (auto* b = m->as<nn::BatchNorm2d>()) {
        nn::init::ones_(b->weight);
        nn::init::zeros_(b->bias);
      }
    }
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = torch::relu(bn1(conv1(x)));
    x = torch::max_pool2d(x, 3, 2, 1);
    for (auto& l : layers) x = l->forward(x);
    return torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
  }

  BackboneKind kind() const override { return BackboneKind::resnet18; }

 private:
  nn::Conv2d conv1{nullptr};
  nn::BatchNorm2d bn1{nullptr};
  std::array<Seq, 4> layers{Seq{nullptr}, Seq{nullptr},
                                       Seq{nullptr}, Seq{nullptr}};
};

// ------------------------------------------------------- MobileNetV3-Small

std::int64_t make_divisible(double v, std::int64_t divisor = 8) {
  std::int64_t new_v =
      std::max<std::int64_t>(divisor, static_cast<std::int64_t>(v + divisor / 2.0) / divisor * divisor);
  if (static_cast<double>(new_v) < 0.9 * v) new_v += divisor;
  return new_v;
}

enum class Act { relu, hardswish, none };

Seq conv_bn_act(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride,
                           std::int64_t groups, Act act) {
  Seq s;
  s->push_back(conv(in, out, k, stride, (k - 1) / 2, groups));
  s->push_back(nn::BatchNorm2d(nn::BatchNorm2dOptions(out).eps(0.001).momentum(0.01)));
  if (act == Act::relu) s->push_back(relu_fn());
  if (act == Act::hardswish) s->push_back(hardswish_fn());
  return s;
}

class SqueezeExcitationImpl : public nn::Module {
 public:
  SqueezeExcitationImpl(std::int64_t channels, std::int64_t squeeze) {
    fc1 = register_module("fc1", conv(channels, squeeze, 1, 1, 0, 1, true));
    fc2 = register_module("fc2", conv(squeeze, channels, 1, 1, 0, 1, true));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto s = torch::adaptive_avg_pool2d(x, {1, 1});
    s = torch::hardsigmoid(fc2(torch::relu(fc1(s))));
    return x * s;
  }
  nn::Conv2d fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(SqueezeExcitation);

struct BneckConfig {
  std::int64_t in, kernel, expanded, out;
  bool se;
  Act act;
  std::int64_t stride;
};

class InvertedResidualImpl : public nn::Module {
 public:
  explicit InvertedResidualImpl(const BneckConfig& c)
      : residual_(c.stride == 1 && c.in == c.out) {
    Seq block;
    if (c.expanded != c.in) block->push_back(conv_bn_act(c.in, c.expanded, 1, 1, 1, c.act));
    block->push_back(conv_bn_act(c.expanded, c.expanded, c.kernel, c.stride, c.expanded, c.act));
    if (c.se) block->push_back(SqueezeExcitation(c.expanded, make_divisible(c.expanded / 4.0)));
    block->push_back(conv_bn_act(c.expanded, c.out, 1, 1, 1, Act::none));
    block_ = register_module("block", block);
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = block_->forward(x);
    return residual_ ? y + x : y;
  }

 private:
  bool residual_;
  Seq block_{nullptr};
};
TORCH_MODULE(InvertedResidual);

class MobileNetV3Small final : public BackboneImpl {
 public:
  MobileNetV3Small() {
    using A = Act;
    // in, kernel, expanded, out, se, activation, stride (ImageNet definition)
    const BneckConfig cfg[] = {
        {16, 3, 16, 16, true, A::relu, 2},       {16, 3, 72, 24, false, A::relu, 2},
        {24, 3, 88, 24, false, A::relu, 1},      {24, 5, 96, 40, true, A::hardswish, 2},
        {40, 5, 240, 40, true, A::hardswish, 1}, {40, 5, 240, 40, true, A::hardswish, 1},
        {40, 5, 120, 48, true, A::hardswish, 1}, {48, 5, 144, 48, true, A::hardswish, 1},
        {48, 5, 288, 96, true, A::hardswish, 2}, {96, 5, 576, 96, true, A::hardswish, 1},
        {96, 5, 576, 96, true, A::hardswish, 1},
    };
    Seq features;
    features->push_back(conv_bn_act(3, 16, 3, 2, 1, Act::hardswish));
    for (const auto& c : cfg) features->push_back(InvertedResidual(c));
    features->push_back(conv_bn_act(96, 576, 1, 1, 1, Act::hardswish));
    features_ = register_module("features", features);

    for (auto& m : modules(false)) {
      if (auto* c = m->as<nn::Conv2d>()) {
        nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut);
        if (c->bias.defined()) nn::init::zeros_(c->bias);
      } else if (auto* b = m->as<nn::BatchNorm2d>()) {
        nn::init::ones_(b->weight);
        nn::init::zeros_(b->bias);
      }
    }
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = features_->forward(x);
    return torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
  }

  BackboneKind kind() const override { return BackboneKind::mobilenet_v3_small; }

 private:
  Seq features_{nullptr};
};

// ------------------------------------------------------------ ConvNeXt-Tiny

/// Channel-wise LayerNorm on NCHW tensors.
class LayerNorm2dImpl : public nn::Module {
 public:
  explicit LayerNorm2dImpl(std::int64_t channels) : channels_(channels) {
    weight = register_parameter("weight", torch::ones({channels}));
    bias = register_parameter("bias", torch::zeros({channels}));
  }
  torch::Tensor forward(torch::Tensor x) {
    x = x.permute({0, 2, 3, 1});
    x = torch::layer_norm(x, {channels_}, weight, bias, 1e-6);
    return x.permute({0, 3, 1, 2});
  }
  torch::Tensor weight, bias;

 private:
  std::int64_t channels_;
};
TORCH_MODULE(LayerNorm2d);

class CNBlockImpl : public nn::Module {
 public:
  CNBlockImpl(std::int64_t dim, double drop_prob) : drop_prob_(drop_prob) {
    Seq block;
    block->push_back(conv(dim, dim, 7, 1, 3, dim, true));
    block->push_back(nn::Functional([](torch::Tensor x) { return x.permute({0, 2, 3, 1}); }));
    block->push_back(nn::LayerNorm(nn::LayerNormOptions({dim}).eps(1e-6)));
    block->push_back(nn::Linear(dim, 4 * dim));
    block->push_back(nn::Functional([](torch::Tensor x) { return torch::gelu(x); }));
    block->push_back(nn::Linear(4 * dim, dim));
    block->push_back(nn::Functional([](torch::Tensor x) { return x.permute({0, 3, 1, 2}); }));
    block_ = register_module("block", block);
    layer_scale = register_parameter("layer_scale", torch::full({dim, 1, 1}, 1e-6));
  }

  torch::Tensor forward(torch::Tensor x) {
    auto y = layer_scale * block_->forward(x);
    if (is_training() && drop_prob_ > 0.0) {
      // Per-sample stochastic depth.
      const double keep = 1.0 - drop_prob_;
      auto mask = torch::empty({y.size(0), 1, 1, 1}, y.options()).bernoulli_(keep);
      y = y * mask / keep;
    }
    return y + x;
  }

  torch::Tensor layer_scale;

 private:
  double drop_prob_;
  Seq block_{nullptr};
};
TORCH_MODULE(CNBlock);

class ConvNeXtTiny final : public BackboneImpl {
 public:
  ConvNeXtTiny() {
    const std::array<std::int64_t, 4> dims = {96, 192, 384, 768};
    const std::array<int, 4> depths = {3, 3, 9, 3};
    constexpr double kStochasticDepth = 0.1;
    const int total_blocks = 18;

    Seq features;
    features->push_back(Seq(conv(3, dims[0], 4, 4, 0, 1, true), LayerNorm2d(dims[0])));
    int block_id = 0;
    for (std::size_t s = 0; s < dims.size(); ++s) {
      Seq stage;
      for (int b = 0; b < depths[s]; ++b) {
        const double p = kStochasticDepth * block_id / (total_blocks - 1.0);
        stage->push_back(CNBlock(dims[s], p));
        ++block_id;
      }
      features->push_back(stage);
      if (s + 1 < dims.size()) {
        features->push_back(
            Seq(LayerNorm2d(dims[s]), conv(dims[s], dims[s + 1], 2, 2, 0, 1, true)));
      }
    }
    features_ = register_module("features", features);
    // Only the norm of the ImageNet classifier is kept; its Linear is dropped.
    classifier_ = register_module("classifier", Seq(LayerNorm2d(dims[3])));

    for (auto& m : modules(false)) {
      if (auto* c = m->as<nn::Conv2d>()) {
        nn::init::normal_(c->weight, 0.0, 0.02);
        c->weight.data().clamp_(-2.0, 2.0);
        if (c->bias.defined()) nn::init::zeros_(c->bias);
      } else if (auto* l = m->as<nn::Linear>()) {
        nn::init::normal_(l->weight, 0.0, 0.02);
        l->weight.data().clamp_(-2.0, 2.0);
        nn::init::zeros_(l->bias);
      }
    }
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = features_->forward(x);
    x = torch::adaptive_avg_pool2d(x, {1, 1});
    return classifier_->forward(x).flatten(1);
  }

  BackboneKind kind() const override { return BackboneKind::convnext_tiny; }

 private:
  Seq features_{nullptr};
  Seq classifier_{nullptr};
};

}  // namespace

std::shared_ptr<BackboneImpl> make_backbone(BackboneKind kind) {
  std::shared_ptr<BackboneImpl> b;
  switch (kind) {
    case BackboneKind::convnext_tiny: b = std::make_shared<ConvNeXtTiny>(); break;
    case BackboneKind::resnet18: b = std::make_shared<ResNet18>(); break;
    case BackboneKind::mobilenet_v3_small: b = std::make_shared<MobileNetV3Small>(); break;
  }
  const auto measured = measured_feature_dim(*b);
  if (measured != feature_dim(kind)) {
    throw ContractViolation("backbone " + std::string(to_string(kind)) + " produces " +
                            std::to_string(measured) + " features, expected " +
                            std::to_string(feature_dim(kind)));
  }
  return b;
}

std::int64_t measured_feature_dim(BackboneImpl& backbone) {
  // The pooled width equals the leading dimension of the last weight that
  // feeds the pooling layer: the final norm (ConvNeXt), the last BatchNorm
  // (ResNet, MobileNet).
  std::int64_t dim = 0;
  for (const auto& p : backbone.named_parameters()) {
    if (p.key().ends_with(".weight") && p.value().dim() == 1) dim = p.value().size(0);
  }
  return dim;
}

}  // namespace wicount
