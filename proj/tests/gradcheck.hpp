// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cmath>

#include "wicount/model.hpp"
#include "wicount/rng.hpp"

namespace wicount::test {

/// Worst relative gap between autograd and central finite differences for
/// the loss gradient with respect to the projection parameters and a sample
/// of head weights. The model runs in float64 on a tiny batch. BatchNorm uses
/// batch statistics: with the untouched running statistics of a fresh model
/// the activations shrink through the network and every gradient is rounding
/// noise.
inline double gradcheck_worst(Task task, std::uint64_t seed, double gamma = 2.0) {
  ModelSpec spec;
  spec.task = task;
  spec.backbone = BackboneKind::mobilenet_v3_small;
  spec.pretrained = false;
  spec.init_seed = seed;
  auto model = build_model(spec);
  model->to(torch::kFloat64);
  model->train();

  torch::manual_seed(seed + 1000);
  const auto x = torch::randn({4, 1, 32, 32}, torch::kFloat64);
  torch::Tensor target;
  if (task == Task::identity_dependent) {
    const auto cls = torch::randint(0, static_cast<long>(kClasses), {4, static_cast<long>(kUserSlots)});
    target = torch::one_hot(cls, static_cast<long>(kClasses)).to(torch::kFloat64);
  } else {
    target = torch::randint(0, 3, {4, static_cast<long>(kActivities)}).to(torch::kFloat64);
  }
  // A random output bias keeps the ReLU counting outputs away from zero.
  {
    torch::NoGradGuard g;
    if (task == Task::identity_agnostic) model->head->bias.uniform_(0.5, 1.5);
  }
  auto loss_fn = [&] {
    const auto out = model->forward(x);
    return task == Task::identity_dependent ? focal_loss(out, target, gamma) : count_loss(out, target);
  };

  model->zero_grad();
  loss_fn().backward();

  std::vector<std::pair<torch::Tensor, std::int64_t>> probes;
  for (std::int64_t i = 0; i < 3; ++i) {
    probes.emplace_back(model->projection->weight, i);
    probes.emplace_back(model->projection->bias, i);
  }
  Rng rng(seed);
  const auto head_n = model->head->weight.numel();
  for (int i = 0; i < 12; ++i) probes.emplace_back(model->head->weight, rng.uniform_int(0, head_n - 1));

  double worst = 0.0;
  constexpr double h = 1e-6;
  torch::NoGradGuard no_grad;
  for (auto& [param, idx] : probes) {
    auto flat = param.view(-1);
    const double analytic = param.grad().view(-1)[idx].item<double>();
    const double orig = flat[idx].item<double>();
    flat[idx] = orig + h;
    const double up = loss_fn().item<double>();
    flat[idx] = orig - h;
    const double down = loss_fn().item<double>();
    flat[idx] = orig;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    worst = std::max(worst, std::fabs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace wicount::test
