// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/lr_schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "wicount/error.hpp"

namespace wicount {

LrSchedule LrSchedule::make(std::int64_t total_steps, double warmup_fraction, double peak) {
  if (total_steps < 1) throw ConfigError("schedule: total_steps must be >= 1");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("schedule: warmup_fraction must be in (0, 1)");
  }
  LrSchedule s;
  s.total_steps = total_steps;
  s.warmup_steps = std::llround(warmup_fraction * static_cast<double>(total_steps));
  s.peak = peak;
  if (s.warmup_steps >= s.total_steps) {
    throw ConfigError("schedule: warmup_steps (" + std::to_string(s.warmup_steps) +
                      ") must be < total_steps (" + std::to_string(total_steps) + ")");
  }
  return s;
}

double lr_at(std::int64_t step, const LrSchedule& s) {
  if (step < 0 || step >= s.total_steps) {
    throw ContractViolation("lr_at: step " + std::to_string(step) + " outside [0, " +
                            std::to_string(s.total_steps) + ")");
  }
  if (step < s.warmup_steps) {
    return s.peak * static_cast<double>(step + 1) / static_cast<double>(s.warmup_steps);
  }
  const double phase = static_cast<double>(step - s.warmup_steps) /
                       static_cast<double>(s.total_steps - s.warmup_steps);
  return s.peak * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

}  // namespace wicount
