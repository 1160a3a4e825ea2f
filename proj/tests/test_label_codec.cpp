// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>

#include "doctest.h"
#include "test_util.hpp"
#include "wicount/error.hpp"
#include "wicount/label_codec.hpp"

using namespace wicount;

TEST_CASE("derive_counts matches a direct tally") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto l = test::random_labels(rng, rng.uniform());
    int expected[kActivities] = {};
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      if (l.slots[u].has_value()) expected[static_cast<int>(l.slots[u].value())] += 1;
    }
    const auto c = derive_counts(l);
    for (std::size_t k = 0; k < kActivities; ++k) CHECK(c[k] == expected[k]);
  }
}

TEST_CASE("counts equal column sums of the one-hot targets") {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto l = test::random_labels(rng);
    const auto t = encode_identity_dependent(l);
    const auto c = derive_counts(l);
    for (std::size_t u = 0; u < kUserSlots; ++u) {
      float row = 0;
      for (float v : t[u]) row += v;
      CHECK(row == 1.0F);
    }
    for (std::size_t k = 0; k < kActivities; ++k) {
      float col = 0;
      for (std::size_t u = 0; u < kUserSlots; ++u) col += t[u][k + 1];
      CHECK(static_cast<int>(col) == c[k]);
    }
    CHECK(decode_identity_dependent(t) == l);
  }
}

TEST_CASE("empty scene encodes as all ABSENT") {
  SlotLabels l;
  const auto t = encode_identity_dependent(l);
  for (const auto& row : t) CHECK(row[0] == 1.0F);
  const auto c = derive_counts(l);
  for (int v : c) CHECK(v == 0);
}

TEST_CASE("two users on the same activity count twice") {
  SlotLabels l;
  l.slots[0] = Activity::walk;
  l.slots[3] = Activity::walk;
  l.slots[4] = Activity::jump;
  const auto c = derive_counts(l);
  CHECK(c[static_cast<int>(Activity::walk)] == 2);
  CHECK(c[static_cast<int>(Activity::jump)] == 1);
  CHECK(l.present_count() == 3);
}

TEST_CASE("six occupied slots produce a warning") {
  SlotLabels l;
  for (auto& s : l.slots) s = Activity::wave;
  CHECK(validate(l).has_value());
  l.slots[5].reset();
  CHECK_FALSE(validate(l).has_value());
}

TEST_CASE("round_counts rounds half away from zero") {
  CountPrediction p{0.5, 1.5, 2.49, 0.0, 0.4999, 2.5, 3.51, 0.0, 1.0};
  const auto r = round_counts(p);
  const CountVector want{1, 2, 2, 0, 0, 3, 4, 0, 1};
  CHECK(r == want);
  p[3] = -0.1;
  CHECK_THROWS_AS(round_counts(p), ContractViolation);
}

TEST_CASE("labels_from_classes inverts class_index") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto l = test::random_labels(rng);
    std::array<int, kUserSlots> classes{};
    for (std::size_t u = 0; u < kUserSlots; ++u) classes[u] = class_index(l.slots[u]);
    CHECK(labels_from_classes(classes) == l);
  }
}
