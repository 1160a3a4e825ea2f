// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "wicount/config.hpp"
#include "wicount/error.hpp"

using namespace wicount;
using nlohmann::json;

namespace {

json smoke() {
  std::ifstream in(WICOUNT_SOURCE_DIR "/configs/synthetic_smoke.json");
  return json::parse(in);
}

}  // namespace

TEST_CASE("shipped configs parse and round-trip") {
  for (const char* name : {"synthetic_smoke.json", "synthetic_acceptance.json", "wimans_convnext.json"}) {
    const auto cfg = load_config(std::string(WICOUNT_SOURCE_DIR "/configs/") + name);
    const auto again = config_from_json(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));
    CHECK(again.fingerprint() == cfg.fingerprint());
    CHECK(cfg.fingerprint().size() == 16);
  }
}

TEST_CASE("the WiMANS config carries the default hyperparameters") {
  const auto cfg = load_config(WICOUNT_SOURCE_DIR "/configs/wimans_convnext.json");
  CHECK(cfg.train.epochs == 50);
  CHECK(cfg.train.batch_size == 16);
  CHECK(cfg.train.lr_projection_peak == 1e-3);
  CHECK(cfg.train.lr_backbone_head_peak == 1e-4);
  CHECK(cfg.train.weight_decay == 1e-2);
  CHECK(cfg.train.warmup_fraction == 0.1);
  CHECK(cfg.train.clip_max_norm == 1.0);
  CHECK(cfg.train.focal_gamma == 2.0);
  CHECK(cfg.transform.target_length == 3000);
  CHECK(cfg.transform.resolution == 270);
  CHECK(cfg.transform.warp_scale_min == 0.95);
  CHECK(cfg.transform.warp_scale_max == 1.05);
  CHECK(cfg.model.backbone == BackboneKind::convnext_tiny);
}

TEST_CASE("missing and unknown keys are rejected by name") {
  auto j = smoke();
  j["train"].erase("epochs");
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
  }
  j = smoke();
  j["train"]["epochz"] = 3;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = smoke();
  j["task"] = "both";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = smoke();
  j["train"]["batch_size"] = 0;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = smoke();
  j["model"]["batchnorm_momentum"] = 1.5;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("overrides replace existing keys only") {
  auto j = apply_overrides(smoke(), {"train.epochs=7", "model.backbone=resnet18",
                                     "protocol.seeds=[4,5]", "dataset.band=2.4"});
  const auto cfg = config_from_json(j);
  CHECK(cfg.train.epochs == 7);
  CHECK(cfg.model.backbone == BackboneKind::resnet18);
  CHECK(cfg.protocol.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(cfg.dataset.band == Band::ghz2_4);
  CHECK_THROWS_AS(apply_overrides(smoke(), {"train.nope=1"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(smoke(), {"no_equals_sign"}), ConfigError);
}

TEST_CASE("fingerprints ignore bookkeeping fields and group across seeds") {
  const auto base = config_from_json(smoke());
  auto j = smoke();
  j["label"] = "other";
  j["output_dir"] = "/elsewhere";
  j["runtime"]["threads"] = 3;
  CHECK(config_from_json(j).fingerprint() == base.fingerprint());
  j = smoke();
  j["protocol"]["seeds"] = json::array({9});
  j["train"]["seed"] = 5;
  const auto seeded = config_from_json(j);
  CHECK(seeded.fingerprint() != base.fingerprint());
  CHECK(seeded.group_fingerprint() == base.group_fingerprint());
  j["train"]["epochs"] = 3;
  CHECK(config_from_json(j).group_fingerprint() != base.group_fingerprint());
}

TEST_CASE("data root falls back to the environment variable") {
  DatasetConfig d;
  d.source = DataSource::directory;
  d.root = "";
  ::unsetenv("WICOUNT_DATA_ROOT");
  CHECK_THROWS_AS(resolve_data_root(d), ConfigError);
  ::setenv("WICOUNT_DATA_ROOT", "/tmp/somewhere", 1);
  CHECK(resolve_data_root(d) == "/tmp/somewhere");
  d.root = "/explicit";
  CHECK(resolve_data_root(d) == "/explicit");
  ::unsetenv("WICOUNT_DATA_ROOT");
}
