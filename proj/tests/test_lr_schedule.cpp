// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "wicount/error.hpp"
#include "wicount/lr_schedule.hpp"
#include "wicount/rng.hpp"

using namespace wicount;

namespace {

double closed_form(std::int64_t t, std::int64_t total, double frac, double peak) {
  const double w = std::round(frac * static_cast<double>(total));
  const double s = static_cast<double>(t);
  if (s < w) return peak * (s + 1.0) / w;
  return 0.5 * peak * (1.0 + std::cos(std::numbers::pi * (s - w) / (static_cast<double>(total) - w)));
}

}  // namespace

TEST_CASE("lr_at matches the closed form, including both boundary steps") {
  const auto s = LrSchedule::make(1000, 0.1, 1e-3);
  CHECK(s.warmup_steps == 100);
  Rng rng(31);
  std::vector<std::int64_t> steps = {0, 99, 100, 999};
  while (steps.size() < 100) steps.push_back(rng.uniform_int(0, 999));
  for (auto t : steps) CHECK(std::fabs(lr_at(t, s) - closed_form(t, 1000, 0.1, 1e-3)) <= 1e-12);
  CHECK(lr_at(99, s) == doctest::Approx(1e-3));
  CHECK(lr_at(100, s) == doctest::Approx(1e-3));
  CHECK(lr_at(0, s) == doctest::Approx(1e-5));
}

TEST_CASE("schedule is continuous and non-increasing after warmup") {
  const auto s = LrSchedule::make(737, 0.1, 1e-4);
  double prev = lr_at(0, s);
  for (std::int64_t t = 1; t < 737; ++t) {
    const double cur = lr_at(t, s);
    CHECK(std::fabs(cur - prev) <= s.peak / static_cast<double>(s.warmup_steps) + 1e-15);
    if (t > s.warmup_steps) CHECK(cur <= prev);
    CHECK(cur > 0.0);
    prev = cur;
  }
}

TEST_CASE("schedule contract errors") {
  const auto s = LrSchedule::make(10, 0.1, 1.0);
  CHECK_THROWS_AS(lr_at(-1, s), ContractViolation);
  CHECK_THROWS_AS(lr_at(10, s), ContractViolation);
  CHECK_THROWS_AS(LrSchedule::make(1, 0.9, 1.0), ConfigError);
  CHECK_THROWS_AS(LrSchedule::make(0, 0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(LrSchedule::make(10, 0.0, 1.0), ConfigError);
}
