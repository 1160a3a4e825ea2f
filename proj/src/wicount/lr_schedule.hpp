// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace wicount {

/// Linear warmup followed by cosine annealing to zero.
struct LrSchedule {
  std::int64_t total_steps = 1;
  std::int64_t warmup_steps = 0;
  double peak = 1e-3;

  /// warmup_steps = round(warmup_fraction * total_steps). Throws ConfigError
  /// if that leaves no cosine phase.
  static LrSchedule make(std::int64_t total_steps, double warmup_fraction, double peak);
};

/// step < warmup: peak * (step + 1) / warmup; afterwards
/// peak * 0.5 * (1 + cos(pi * (step - warmup) / (total - warmup))).
/// Throws ContractViolation for step outside [0, total_steps).
double lr_at(std::int64_t step, const LrSchedule& schedule);

}  // namespace wicount
